#pragma once

#include <stdexcept>
#include <string>

namespace clearing {

// std::invalid_argument covers precondition failures throughout; the types
// below name the domain failures callers are expected to handle.

class DegenerateSpectrumError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NoGroundIntersectionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UndefinedRateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InvalidScheduleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace clearing
