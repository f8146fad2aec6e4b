#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "qstoch/coeffs.hpp"
#include "qstoch/toyfock.hpp"
#include "qstoch/wongzakai.hpp"

namespace qstoch {

using Json = nlohmann::json;

// Which side of the calculus a coefficient file carries: Ito tables use G
// block labels and are gauge-free; time-ordered exponent tables use E labels
// and must record the gauge they were written in.
enum class TableKind { Ito, Strat };

struct CoefficientFile {
    TableKind kind = TableKind::Ito;
    CoefficientBlock table;
    std::optional<GaugeParameter> kappa; // always present for Strat files
};

// complex scalars as [re, im], matrices as row-major nested arrays of them
Json complex_to_json(cx z);
cx complex_from_json(const Json& j, const std::string& where);
Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j, const std::string& where);

// block label: "G00" for one channel, "G1_2" above that; readers accept both
std::string block_label(TableKind kind, int a, int b, int channels);

// File layout: {"d": int, "channels": int, "blocks": {label: matrix, ...}}
// plus "kappa": [re, im] on Strat files only. Omitted blocks are zero; at
// least one block must be present to fix the kind. Unknown keys, mixed E/G
// labels, out-of-range indices and shape mismatches raise SchemaError naming
// the offender.
Json coefficients_to_json(const CoefficientBlock& table, TableKind kind,
                          const std::optional<GaugeParameter>& kappa);
CoefficientFile coefficients_from_json(const Json& j);

Json read_json_file(const std::string& path); // ParseError on missing file or bad JSON
void write_json_file(const std::string& path, const Json& j);
CoefficientFile read_coefficient_file(const std::string& path);
void write_coefficient_file(const std::string& path, const CoefficientBlock& table,
                            TableKind kind, const std::optional<GaugeParameter>& kappa);

// CSV bodies for the sweep tables, 17 significant digits, one header row
std::string sweep_csv(const SweepResult& r);
std::string wz_csv(const WzResult& r);
void write_text_file(const std::string& path, const std::string& body);

} // namespace qstoch
