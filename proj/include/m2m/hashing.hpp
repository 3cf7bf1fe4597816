#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace m2m {

// SHA-256 of a byte string, hex-encoded. Used as the content hash echoed
// into artifacts so runs are attributable to an exact resolved config.
std::string sha256_hex(std::string_view bytes);

// Short (16 hex chars) content hash for manifests and filenames.
std::string content_hash(std::string_view bytes);

}  // namespace m2m
