#pragma once

#include <stdexcept>
#include <string>

namespace clutchshape {

// Malformed or out-of-range input. Maps to exit code 2 at the CLI.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// A clutch transition that the state machine does not allow.
class IllegalTransition : public InvalidInput {
public:
    explicit IllegalTransition(const std::string& what) : InvalidInput(what) {}
};

// Numerical failure during a solve or transient. Maps to exit code 1.
class SolverFailure : public std::runtime_error {
public:
    explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace clutchshape
