#pragma once

#include <stdexcept>
#include <string>

namespace roballoc {

/// Mismatched vector sizes (budget vs channels, x vs edges, ...).
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The constrained problem has an empty feasible set.
struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation requested on an uncertainty-set kind that does not support it.
struct unsupported_set_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
struct parse_error : std::runtime_error {
    std::size_t line;
    parse_error(const std::string& path, std::size_t line_no, const std::string& what_arg)
        : std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what_arg), line(line_no) {}
};

/// Instance contents violate a structural invariant (duplicate edge, bad count, ...).
struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace roballoc
