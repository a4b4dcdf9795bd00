#include "shiftsel/errors.hpp"

namespace shiftsel {

ParseError::ParseError(Kind kind, std::string message, std::size_t line, std::size_t offset)
    : std::runtime_error(std::move(message)), kind_(kind), line_(line), offset_(offset) {}

IoError::IoError(const std::string& path, const std::string& what)
    : std::runtime_error(what + ": " + path), path_(path) {}

}  // namespace shiftsel
