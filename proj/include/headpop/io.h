#ifndef HEADPOP_IO_H
#define HEADPOP_IO_H

#include <string>

namespace headpop::io {

// Whole-file read; IoError if the file cannot be opened.
std::string read_file(const std::string& path);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace headpop::io

#endif  // HEADPOP_IO_H
