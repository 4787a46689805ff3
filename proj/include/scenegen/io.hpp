#pragma once

#include <string>

namespace scenegen {

// Throws Error when the file cannot be read.
std::string read_file(const std::string& path);

// Writes to a temporary sibling and renames into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace scenegen
