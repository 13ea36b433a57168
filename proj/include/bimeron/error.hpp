#pragma once

#include <stdexcept>
#include <string>

namespace bimeron {

/// Raised for every contract violation in the library. The message is the
/// short, stable phrase the CLI prints and the tests match against.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bimeron
