#pragma once

#include <stdexcept>
#include <string>

namespace engagemax {

// Error taxonomy shared by the library and the CLI. The CLI maps each
// category to a fixed process exit code.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
    static constexpr int exit_code = 2;
};

class capability_error : public std::runtime_error {
public:
    explicit capability_error(const std::string& msg) : std::runtime_error(msg) {}
    static constexpr int exit_code = 3;
};

class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
    static constexpr int exit_code = 4;
};

class audit_error : public std::runtime_error {
public:
    explicit audit_error(const std::string& msg) : std::runtime_error(msg) {}
    static constexpr int exit_code = 5;
};

}  // namespace engagemax
