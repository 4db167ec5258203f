#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace twinmap {

enum class ErrorKind {
    parse,              // malformed input text (XML, config, graph file)
    dangling_reference, // OSM way references a node that is not in the extract
    format,             // DEM / XYZ / graph file format violations
    precondition,       // caller violated an operation precondition
    degenerate_input,   // too few / coincident points for a geometric solve
    no_overlap,         // ICP found fewer than 2 correspondences
    domain,             // evaluation outside [0, length]
    missing_profile,    // road has no elevation profile
    lookup,             // unknown lane id
    unsupported_record, // OpenDRIVE record outside the implemented subset
    unmapped_class,     // highway class with no conversion rule
    missing_terrain,    // DEM nodata / out of coverage at a required sample
    out_of_bounds,      // DEM query outside the cell-center rectangle
    nodata,             // DEM query touching a nodata cell
    empty_mesh,         // terrain bounds do not intersect DEM coverage
    validation,         // refusing to operate on a road that fails validation
    io,                 // filesystem failures
};

inline const char* error_kind_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::dangling_reference: return "dangling-reference";
    case ErrorKind::format: return "format";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::no_overlap: return "no-overlap";
    case ErrorKind::domain: return "domain";
    case ErrorKind::missing_profile: return "missing-profile";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::unsupported_record: return "unsupported-record";
    case ErrorKind::unmapped_class: return "unmapped-class";
    case ErrorKind::missing_terrain: return "missing-terrain";
    case ErrorKind::out_of_bounds: return "out-of-bounds";
    case ErrorKind::nodata: return "nodata";
    case ErrorKind::empty_mesh: return "empty-mesh";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind),
          message_(std::move(message))
    {
    }

    ErrorKind kind() const { return kind_; }

    // Message without the kind prefix.
    const std::string& message() const { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

} // namespace twinmap
