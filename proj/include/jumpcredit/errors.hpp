#ifndef JUMPCREDIT_ERRORS_HPP
#define JUMPCREDIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace jumpcredit {

    //! Argument outside the mathematical domain of an operation.
    class DomainError : public std::domain_error {
      public:
        using std::domain_error::domain_error;
    };

    //! Result exceeds the double range (e.g. K_nu(z) for tiny z and large order).
    class OverflowError : public std::overflow_error {
      public:
        using std::overflow_error::overflow_error;
    };

    //! Moment data with excess kurtosis <= 0 cannot be mapped onto a jump model.
    class NonPositiveKurtosis : public DomainError {
      public:
        explicit NonPositiveKurtosis(double kurtosis)
        : DomainError("excess kurtosis must be positive for a jump model, got "
                      + std::to_string(kurtosis)),
          kurtosis_(kurtosis) {}
        double kurtosis() const noexcept { return kurtosis_; }

      private:
        double kurtosis_;
    };

    //! A Gamma argument of the symVG series coefficient sits on (or next to) a pole.
    class PoleProximity : public DomainError {
      public:
        using DomainError::DomainError;
    };

    //! Adaptive quadrature failed to reach the requested tolerance.
    class IntegrationError : public std::runtime_error {
      public:
        using std::runtime_error::runtime_error;
    };

    //! No asset value reproduces the observed equity value.
    class NoSolution : public std::runtime_error {
      public:
        using std::runtime_error::runtime_error;
    };

    //! Sample with zero variance.
    class DegenerateSeries : public DomainError {
      public:
        using DomainError::DomainError;
    };

    //! Input file problem; carries the 1-based line number (0 when not line specific).
    class ParseError : public std::runtime_error {
      public:
        ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
        std::size_t line() const noexcept { return line_; }

      private:
        std::size_t line_;
    };

    class NonPositivePrice : public ParseError {
      public:
        using ParseError::ParseError;
    };

    class NonMonotoneDates : public ParseError {
      public:
        using ParseError::ParseError;
    };

    class TooShort : public ParseError {
      public:
        using ParseError::ParseError;
    };

}

#endif
