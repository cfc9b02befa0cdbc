#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vdlab {

// printf-style formatting into a std::string.
std::string strfmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

std::string trim(const std::string& s);
std::string to_lower(std::string s);
std::vector<std::string> split(const std::string& s, char delim);

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t state = kFnvOffset);
std::uint64_t fnv1a64(const std::string& s, std::uint64_t state = kFnvOffset);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace vdlab
