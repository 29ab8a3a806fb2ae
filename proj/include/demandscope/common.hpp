#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace demandscope {

// Error hierarchy. Every failure class named by the pipeline maps onto one of
// these so callers can catch selectively.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define DEMANDSCOPE_DEFINE_ERROR(NAME)                                       \
    struct NAME : Error {                                                     \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {}    \
    }

DEMANDSCOPE_DEFINE_ERROR(NoStableBills);
DEMANDSCOPE_DEFINE_ERROR(NoEligibleImage);
DEMANDSCOPE_DEFINE_ERROR(OutOfBounds);
DEMANDSCOPE_DEFINE_ERROR(TooFewSamples);
DEMANDSCOPE_DEFINE_ERROR(MissingCell);
DEMANDSCOPE_DEFINE_ERROR(UnknownWard);
DEMANDSCOPE_DEFINE_ERROR(ShapeMismatch);
DEMANDSCOPE_DEFINE_ERROR(InvalidConfig);
DEMANDSCOPE_DEFINE_ERROR(NonFiniteGradient);
DEMANDSCOPE_DEFINE_ERROR(Divergence);
DEMANDSCOPE_DEFINE_ERROR(ZeroVariance);
DEMANDSCOPE_DEFINE_ERROR(TooFewCounties);
DEMANDSCOPE_DEFINE_ERROR(ParseError);
DEMANDSCOPE_DEFINE_ERROR(IoError);

#undef DEMANDSCOPE_DEFINE_ERROR

// Calendar month, the only time resolution the billing pipeline needs.
struct Month {
    int year = 0;
    int month = 1;  // 1..12

    constexpr int index() const { return year * 12 + (month - 1); }

    static constexpr Month from_index(int idx) {
        Month m;
        m.year = idx >= 0 ? idx / 12 : -((-idx + 11) / 12);
        m.month = idx - m.year * 12 + 1;
        return m;
    }

    Month plus_months(int n) const { return from_index(index() + n); }

    friend constexpr bool operator==(Month a, Month b) { return a.index() == b.index(); }
    friend constexpr bool operator!=(Month a, Month b) { return !(a == b); }
    friend constexpr bool operator<(Month a, Month b) { return a.index() < b.index(); }
    friend constexpr bool operator<=(Month a, Month b) { return a.index() <= b.index(); }
    friend constexpr bool operator>(Month a, Month b) { return b < a; }
    friend constexpr bool operator>=(Month a, Month b) { return b <= a; }
};

inline std::string format_month(Month m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", m.year, m.month);
    return buf;
}

inline Month parse_month(const std::string& s) {
    if (s.size() != 7 || s[4] != '-') throw ParseError("bad month '" + s + "', expected YYYY-MM");
    for (int i : {0, 1, 2, 3, 5, 6})
        if (s[i] < '0' || s[i] > '9') throw ParseError("bad month '" + s + "'");
    Month m;
    m.year = std::stoi(s.substr(0, 4));
    m.month = std::stoi(s.substr(5, 2));
    if (m.month < 1 || m.month > 12) throw ParseError("month out of range in '" + s + "'");
    return m;
}

// Consumption tiers; the 30/60 kWh boundary is discontinuous on purpose.
enum class TierLabel { Low, High, ExcludedMid };

inline const char* tier_name(TierLabel t) {
    switch (t) {
        case TierLabel::Low: return "low";
        case TierLabel::High: return "high";
        case TierLabel::ExcludedMid: return "mid";
    }
    return "?";
}

inline TierLabel parse_tier(const std::string& s) {
    if (s == "low") return TierLabel::Low;
    if (s == "high") return TierLabel::High;
    if (s == "mid") return TierLabel::ExcludedMid;
    throw ParseError("unknown tier '" + s + "'");
}

// Boundaries inclusive: 30 -> Low, 60 -> High, anything strictly between is
// withheld from training.
inline TierLabel assign_label(double kwh) {
    if (!std::isfinite(kwh)) throw ParseError("non-finite kWh in assign_label");
    if (kwh <= 30.0) return TierLabel::Low;
    if (kwh >= 60.0) return TierLabel::High;
    return TierLabel::ExcludedMid;
}

constexpr int kPatchSize = 128;
constexpr double kDefaultMetersPerPixel = 0.5;
// Equirectangular scale: degrees per meter at the equator.
constexpr double kDegPerMeter = 1.0 / 111320.0;

}  // namespace demandscope
