// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stegano {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    CapacityError(std::size_t required, std::size_t available)
        : Error("capacity exceeded: payload requires " + std::to_string(required) +
                " carrier positions but only " + std::to_string(available) + " are available"),
          required_(required),
          available_(available) {}

    explicit CapacityError(const std::string& what) : Error(what) {}

    std::size_t required() const noexcept { return required_; }
    std::size_t available() const noexcept { return available_; }

private:
    std::size_t required_ = 0;
    std::size_t available_ = 0;
};

class MalformedStego : public Error {
public:
    using Error::Error;
};

class InvalidKey : public Error {
public:
    using Error::Error;
};

class SeparatorCollision : public Error {
public:
    using Error::Error;
};

class NonFiniteState : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace stegano
