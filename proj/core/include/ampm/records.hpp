#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ampm {

// AM = morning milking, PM = evening milking.
enum class Session : int { AM = 0, PM = 1 };

inline int session_index(Session s) { return static_cast<int>(s); }
inline const char* session_name(Session s) {
    return s == Session::AM ? "AM" : "PM";
}

// One sampled milking of one cow on one test day.
struct MilkingRecord {
    std::int64_t cow_id = 0;
    Session session = Session::AM;
    double interval_h = 0.0;               // hours since the previous milking
    double partial_kg = 0.0;               // yield of this single milking
    std::optional<double> daily_kg;        // full test-day yield, absent for
                                           // prediction-only records
    std::optional<double> dim;             // days in milk at the test date
};

struct MilkingDataset {
    std::vector<MilkingRecord> records;
    std::string provenance;                // seed + config snapshot, or source file
};

// A milking to predict a daily yield for: a MilkingRecord minus the answer.
struct PartialObservation {
    Session session = Session::AM;
    double interval_h = 0.0;
    double partial_kg = 0.0;
    std::optional<double> dim;
};

inline PartialObservation observation_of(const MilkingRecord& r) {
    return PartialObservation{r.session, r.interval_h, r.partial_kg, r.dim};
}

} // namespace ampm
