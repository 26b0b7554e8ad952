#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dw {

/// Domain error carrying a stable machine-readable code.
///
/// Codes are upper-case identifiers such as CYCLE, NOT_REMOVABLE or
/// WRONG_PHASE. `node` and `row` give optional location context and may be
/// empty.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, std::string node = {}, std::string row = {})
        : std::runtime_error(message)
        , code_(std::move(code))
        , node_(std::move(node))
        , row_(std::move(row)) {}

    const std::string& code() const noexcept { return code_; }
    const std::string& node() const noexcept { return node_; }
    const std::string& row() const noexcept { return row_; }

private:
    std::string code_;
    std::string node_;
    std::string row_;
};

}  // namespace dw
