#pragma once

// JSON emission helpers shared by the CLI. Exact rationals cross the
// boundary as "p/q" strings (never floats); complex values as [re, im].

#include "qcis/commutant.hpp"
#include "qcis/scalars.hpp"
#include "qcis/series.hpp"

#include <json.hpp>

#include <complex>
#include <string>

namespace qcis {

using Json = nlohmann::ordered_json;

inline Json json_rational(const Rational& x) { return to_string(x); }

inline Json json_rational_pair(const Rational& x)
{
    return Json::array({numerator(x).str(), denominator(x).str()});
}

inline Json json_complex(std::complex<double> z) { return Json::array({z.real(), z.imag()}); }

inline Json json_series(const LaurentSeries<Rational>& s)
{
    Json coeffs = Json::array();
    for (int k = s.valuation(); k < s.trunc(); ++k)
        coeffs.push_back(json_rational_pair(s.at_or_zero(k)));
    return Json{{"valuation", s.valuation()}, {"coeffs", coeffs}, {"trunc", s.trunc()}};
}

inline Json json_curve(const SpectralCurve& curve)
{
    Json coeffs = Json::array();
    for (const Rational& c : curve.coeffs())
        coeffs.push_back(json_rational(c));
    return Json{{"degree", curve.degree()}, {"coeffs", coeffs}};
}

} // namespace qcis
