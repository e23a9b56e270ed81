#ifndef DPMOM_ERROR_HPP
#define DPMOM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace dpmom {

enum class ErrorCode {
  ContractViolation,  // a precondition or invariant was violated by the caller
  SpawnOverflow,      // cluster count exceeded the configured guard
  MergeImpossible,    // no cluster reaches the minimum size
  DegenerateData,     // data admits no meaningful answer (e.g. all points identical)
  NoEvidence,         // statistic undefined (e.g. all paired differences zero)
  NumericFault,       // non-finite value produced where one must not appear
  ParseError,         // malformed input file
  IoError,            // file system failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void check(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw Error(code, message);
}

inline void check_contract(bool ok, const std::string& message) {
  check(ok, ErrorCode::ContractViolation, message);
}

}  // namespace dpmom

#endif  // DPMOM_ERROR_HPP
