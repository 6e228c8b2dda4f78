#ifndef JUMPCREDIT_QUADRATURE_HPP
#define JUMPCREDIT_QUADRATURE_HPP

// Thin checked wrappers over Boost's double-exponential rules.

#include <jumpcredit/errors.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <string>

namespace jumpcredit::quad {

    struct Result {
        double value;
        double error;
    };

    namespace detail {

        inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
            thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
            return rule;
        }

        inline boost::math::quadrature::exp_sinh<double>& exp_sinh_rule() {
            thread_local boost::math::quadrature::exp_sinh<double> rule(12);
            return rule;
        }

        inline Result checked(double value, double error, double abs_tol, double rel_tol, const char* what) {
            if (!std::isfinite(value))
                throw IntegrationError(std::string(what) + ": non-finite result");
            const double tol = std::max(abs_tol, rel_tol * std::fabs(value));
            if (error > tol) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%s: error estimate %.3g exceeds tolerance %.3g (value %.6g)", what,
                              error, tol, value);
                throw IntegrationError(buf);
            }
            return {value, error};
        }

    }

    //! Integral over [a, b] (finite). f may take (x) or (x, distance-to-nearest-endpoint).
    template <class F>
    Result finite(F f, double a, double b, double abs_tol, double rel_tol = 1e-10) {
        if (a == b) return {0.0, 0.0};
        double err = 0.0;
        double l1 = 0.0;
        std::size_t levels = 0;
        double v;
        try {
            v = detail::tanh_sinh_rule().integrate(f, a, b, 1e-13, &err, &l1, &levels);
        } catch (const std::exception& e) {
            throw IntegrationError(std::string("tanh_sinh: ") + e.what());
        }
        return detail::checked(v, err, abs_tol, rel_tol, "tanh_sinh");
    }

    //! Integral over [a, +inf).
    template <class F>
    Result upper(F f, double a, double abs_tol, double rel_tol = 1e-10) {
        double err = 0.0;
        double l1 = 0.0;
        std::size_t levels = 0;
        double v;
        try {
            // exp_sinh on [a, inf) is evaluated as the shifted integral on [0, inf)
            auto g = [&](double u) { return f(a + u); };
            v = detail::exp_sinh_rule().integrate(g, 0.0, std::numeric_limits<double>::infinity(),
                                                  1e-13, &err, &l1, &levels);
        } catch (const std::exception& e) {
            throw IntegrationError(std::string("exp_sinh: ") + e.what());
        }
        return detail::checked(v, err, abs_tol, rel_tol, "exp_sinh");
    }

}

#endif
