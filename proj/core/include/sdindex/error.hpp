#pragma once

#include <stdexcept>
#include <string>

namespace sdindex {

enum class errc {
    invalid_weights,
    no_intersection,
    empty_dataset,
    wrong_slope,
    duplicate_id,
    not_found,
    invalid_k,
    dimension_mismatch,
    invalid_spec,
    invalid_argument,
    parse_error,
    io_error,
};

[[nodiscard]] const char* to_string(errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    [[nodiscard]] errc code() const noexcept { return code_; }

private:
    errc code_;
};

}  // namespace sdindex
