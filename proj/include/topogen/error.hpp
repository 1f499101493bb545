#pragma once

#include <stdexcept>
#include <string>

namespace topogen {

// Exit-code mapping used by the CLI: InputError -> 2, ResourceError -> 3,
// InvariantError -> 4.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ShapeError : public InputError {
public:
    using InputError::InputError;
};

} // namespace topogen
