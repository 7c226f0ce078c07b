#pragma once

#include <stdexcept>
#include <string>

namespace knnim {

// Malformed or inconsistent data (files, measures, treatment values).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A caller-supplied parameter or a derived quantity violates an operation's
// precondition (k >= n, empty focal set, undefined observed statistic, ...).
class PreconditionError : public std::logic_error {
public:
    explicit PreconditionError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace knnim
