#pragma once

#include <stdexcept>
#include <string>

namespace micromaser {

// Root of every error the library raises. Sweeps catch this type and turn it
// into a record flag instead of aborting.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* flag() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* flag() const noexcept override { return "invalid_argument"; }
};

// Panel doubling exceeded its cap before successive U2 estimates agreed.
class NonConvergence : public Error {
public:
    using Error::Error;
    const char* flag() const noexcept override { return "quadrature_nonconvergence"; }
};

class SingularSystem : public Error {
public:
    using Error::Error;
    const char* flag() const noexcept override { return "singular_system"; }
};

// Stationary state not contained in the truncation, or residual too large.
class Unconverged : public Error {
public:
    Unconverged(const std::string& what, double tail_mass, double residual)
        : Error(what), tail_mass_(tail_mass), residual_(residual) {}
    const char* flag() const noexcept override { return "unconverged"; }
    double tail_mass() const noexcept { return tail_mass_; }
    double residual() const noexcept { return residual_; }

private:
    double tail_mass_;
    double residual_;
};

class SpectrumAnomaly : public Error {
public:
    enum class Reason { NoZeroMode, Degenerate, Unstable, NoGap };

    SpectrumAnomaly(const std::string& what, Reason reason) : Error(what), reason_(reason) {}
    Reason reason() const noexcept { return reason_; }
    const char* flag() const noexcept override {
        switch (reason_) {
            case Reason::NoZeroMode: return "no_zero_mode";
            case Reason::Degenerate: return "degenerate";
            case Reason::Unstable: return "unstable_spectrum";
            case Reason::NoGap: return "no_gap";
        }
        return "spectrum_anomaly";
    }

private:
    Reason reason_;
};

class StepTooLarge : public Error {
public:
    StepTooLarge(const std::string& what, double suggested_dt) : Error(what), suggested_dt_(suggested_dt) {}
    double suggested_dt() const noexcept { return suggested_dt_; }

private:
    double suggested_dt_;
};

class InsufficientDecay : public Error {
public:
    using Error::Error;
};

class ConfigInvalid : public Error {
public:
    using Error::Error;
};

class OutputUnwritable : public Error {
public:
    using Error::Error;
};

}  // namespace micromaser
