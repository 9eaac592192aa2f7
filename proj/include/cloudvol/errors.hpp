#pragma once

#include <stdexcept>
#include <string>

namespace cloudvol {

// Error categories map 1:1 onto CLI exit codes: config 2, io 3, numeric 4.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cloudvol
