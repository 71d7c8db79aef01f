#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace katr {

enum class ErrorCode {
    invalid_input,
    empty_graph,
    non_positive_weight,
    unknown_vertex,
    invalid_partition_size,
    unknown_subgraph,
    uncoverable_keyword,
    invalid_query,
    enumeration_limit,
    index_mismatch,
    timeout,
    io,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable code and, where one applies, the
/// offending item (edge index, keyword id, vertex id, ...).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::int64_t subject = -1)
        : std::runtime_error(message), code_(code), subject_(subject) {}

    ErrorCode code() const noexcept { return code_; }
    std::int64_t subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::int64_t subject_;
};

}  // namespace katr
