#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace agidet {

// Base class for every failure mode named in the module contracts.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define AGIDET_DEFINE_ERROR(Name)                                 \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& m) : Error(#Name ": " + m) {} \
    }

// ingest
AGIDET_DEFINE_ERROR(MissingChannel);
AGIDET_DEFINE_ERROR(MalformedHeader);
AGIDET_DEFINE_ERROR(NonMonotonicData);
AGIDET_DEFINE_ERROR(InvalidSpan);
AGIDET_DEFINE_ERROR(OverlapConflict);

// preprocess
AGIDET_DEFINE_ERROR(CutoffAboveNyquist);
AGIDET_DEFINE_ERROR(NoBeatsDetected);
AGIDET_DEFINE_ERROR(InsufficientOverlap);

// features
AGIDET_DEFINE_ERROR(NoCompleteWindow);
AGIDET_DEFINE_ERROR(AllColumnsInvalid);
AGIDET_DEFINE_ERROR(SessionMismatch);

// vae
AGIDET_DEFINE_ERROR(ShapeMismatch);
AGIDET_DEFINE_ERROR(NonFiniteLoss);
AGIDET_DEFINE_ERROR(ColumnMismatch);

// ensemble
AGIDET_DEFINE_ERROR(EmptyNode);
AGIDET_DEFINE_ERROR(VersionMismatch);
AGIDET_DEFINE_ERROR(CorruptModel);

// selftrain
AGIDET_DEFINE_ERROR(MissingClass);

// eval
AGIDET_DEFINE_ERROR(ClassTooSmall);
AGIDET_DEFINE_ERROR(UndefinedClassRate);
AGIDET_DEFINE_ERROR(SingleClassScores);

// synth
AGIDET_DEFINE_ERROR(OverlappingEpisodes);
AGIDET_DEFINE_ERROR(InfeasibleTargets);

// cli / config
AGIDET_DEFINE_ERROR(ConfigError);
AGIDET_DEFINE_ERROR(DataError);

#undef AGIDET_DEFINE_ERROR

// Formats a double with 17 significant digits, enough for a lossless
// text round-trip.
std::string fmt_g17(double v);

// strtod with full-string validation; throws MalformedHeader-free
// std::invalid_argument so call sites can wrap in their own error.
double parse_double_strict(const std::string& s);

}  // namespace agidet
