#include "reldata/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace reldata {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out{s};
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view to_string(Task task) {
    return task == Task::QC ? "qc" : "qi";
}

Task parse_task(std::string_view text) {
    const auto lowered = ascii_lower(text);
    if (lowered == "qc") return Task::QC;
    if (lowered == "qi") return Task::QI;
    throw DataError("unknown task '" + std::string{text} + "' (expected qc or qi)");
}

std::string_view to_string(Origin origin) {
    switch (origin) {
        case Origin::Original: return "original";
        case Origin::Translated: return "translated";
        case Origin::SyntheticNegative: return "synthetic_negative";
    }
    return "original";
}

Origin parse_origin(std::string_view text) {
    const auto lowered = ascii_lower(text);
    if (lowered == "original") return Origin::Original;
    if (lowered == "translated") return Origin::Translated;
    if (lowered == "synthetic_negative" || lowered == "syntheticnegative") {
        return Origin::SyntheticNegative;
    }
    throw DataError("unknown origin '" + std::string{text} + "'");
}

}  // namespace reldata
