#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace windxai {

inline constexpr const char* kVersion = "0.1.0";

// Configuration / argument problems. Mapped to exit code 1 by the CLI.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or missing input data. Mapped to exit code 2 by the CLI.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure (divergence, non-finite model output). Exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Feature : int { WindSpeed = 0, AirDensity = 1, TurbulenceIntensity = 2, YawMisalignment = 3 };

inline const char* feature_name(Feature f) {
    switch (f) {
        case Feature::WindSpeed: return "v_w";
        case Feature::AirDensity: return "rho";
        case Feature::TurbulenceIntensity: return "ti";
        case Feature::YawMisalignment: return "delta_yaw";
    }
    return "?";
}

inline Feature feature_from_name(const std::string& name) {
    if (name == "v_w") return Feature::WindSpeed;
    if (name == "rho") return Feature::AirDensity;
    if (name == "ti") return Feature::TurbulenceIntensity;
    if (name == "delta_yaw") return Feature::YawMisalignment;
    throw UsageError("unknown feature name: " + name);
}

// One 10-minute SCADA observation. Power in kW, wind speed in m/s,
// air density in kg/m^3, turbulence intensity dimensionless,
// yaw misalignment in degrees (absolute), timestamp in UTC seconds.
struct ScadaRecord {
    std::int64_t timestamp = 0;
    double v_w = 0.0;
    double rho = 0.0;
    double ti = 0.0;
    double delta_yaw = 0.0;
    double power = 0.0;
    bool status_ok = true;

    double feature(Feature f) const {
        switch (f) {
            case Feature::WindSpeed: return v_w;
            case Feature::AirDensity: return rho;
            case Feature::TurbulenceIntensity: return ti;
            case Feature::YawMisalignment: return delta_yaw;
        }
        return 0.0;
    }
};

// Field-level validity used by the ingestion path; synthetic data satisfies
// this by construction.
inline bool record_valid(const ScadaRecord& r) {
    return r.v_w >= 0.0 && r.ti >= 0.0 && r.ti < 1.0 && r.rho > 0.8 && r.rho < 1.5 &&
           r.delta_yaw >= 0.0 && r.delta_yaw <= 180.0 && r.power >= -50.0;
}

using Records = std::vector<ScadaRecord>;

// Temporal train/test split with a validation subset drawn from the
// training period.
struct DataSplit {
    Records train;
    Records val;
    Records test;
    std::uint64_t seed = 0;
};

// Half-open UTC time interval [begin, end).
struct TimeInterval {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    bool contains(std::int64_t t) const { return t >= begin && t < end; }
    bool overlaps(const TimeInterval& o) const { return begin < o.end && o.begin < end; }
};

}  // namespace windxai
