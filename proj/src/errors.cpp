#include "filterlens/errors.hpp"

namespace filterlens {

FormatError::FormatError(Kind kind, std::uint64_t offset, const std::string& what)
    : std::runtime_error(what), kind_(kind), offset_(offset) {}

IoError::IoError(std::uint64_t position, const std::string& what)
    : std::runtime_error(what), position_(position) {}

CsvError::CsvError(Kind kind, std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), kind_(kind), line_(line) {}

TrainingFailure::TrainingFailure(std::size_t epoch, const std::string& what)
    : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

}  // namespace filterlens
