#pragma once

#include <stdexcept>
#include <string>

namespace fk {

// Exit-code groups used by the CLI. Each concrete error type maps to one;
// `fk --help` documents the mapping.
enum class ErrorCode : int {
  usage = 1,
  file_not_found = 2,
  bad_file_format = 3,
  shape_mismatch = 4,
  numeric = 5,
  empty_data = 6,
  invalid_argument = 7,
  incompatible_reports = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define FK_ERROR_TYPE(Name, Code)                                    \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Code, what) {}    \
  }

// tensor_core
FK_ERROR_TYPE(InvalidShape, ErrorCode::shape_mismatch);
FK_ERROR_TYPE(InvalidArgument, ErrorCode::invalid_argument);

// nn_graph
FK_ERROR_TYPE(ShapeError, ErrorCode::shape_mismatch);
FK_ERROR_TYPE(EmptyData, ErrorCode::empty_data);
FK_ERROR_TYPE(BadMagic, ErrorCode::bad_file_format);
FK_ERROR_TYPE(TruncatedCheckpoint, ErrorCode::bad_file_format);
FK_ERROR_TYPE(CorruptCheckpoint, ErrorCode::bad_file_format);

// dataset_io
FK_ERROR_TYPE(CountMismatch, ErrorCode::bad_file_format);
FK_ERROR_TYPE(Truncated, ErrorCode::bad_file_format);
FK_ERROR_TYPE(BadRecordSize, ErrorCode::bad_file_format);
FK_ERROR_TYPE(BadLabel, ErrorCode::bad_file_format);
FK_ERROR_TYPE(FileNotFound, ErrorCode::file_not_found);

// linalg_svd
FK_ERROR_TYPE(NumericError, ErrorCode::numeric);
FK_ERROR_TYPE(InvalidOrientation, ErrorCode::invalid_argument);

// fragility_analysis / targeting
FK_ERROR_TYPE(TooFewKernels, ErrorCode::empty_data);
FK_ERROR_TYPE(IncompatibleReports, ErrorCode::incompatible_reports);

// kernel_defense
FK_ERROR_TYPE(EmptySet, ErrorCode::empty_data);
FK_ERROR_TYPE(InvalidIndex, ErrorCode::invalid_argument);
FK_ERROR_TYPE(EmptyFragileSet, ErrorCode::empty_data);
FK_ERROR_TYPE(EmptyNullSet, ErrorCode::empty_data);
FK_ERROR_TYPE(EmptyGrid, ErrorCode::empty_data);

#undef FK_ERROR_TYPE

}  // namespace fk
