#include "qstoch/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "qstoch/errors.hpp"

namespace qstoch {

namespace {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double number_at(const Json& j, const std::string& where) {
    if (!j.is_number()) throw SchemaError(where + " must be a number");
    return j.get<double>();
}

// "G00" / "E1_2" -> (kind, a, b); throws SchemaError on anything else
struct ParsedLabel {
    TableKind kind;
    int a, b;
};

int parse_index(const std::string& digits, const std::string& label) {
    if (digits.empty() || digits.size() > 3)
        throw SchemaError("block label '" + label + "' has a malformed index");
    for (char c : digits)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw SchemaError("block label '" + label + "' has a non-numeric index");
    return std::stoi(digits);
}

ParsedLabel parse_label(const std::string& label) {
    if (label.size() < 3 || (label[0] != 'G' && label[0] != 'E'))
        throw SchemaError("block label '" + label + "' must look like G00 or E1_2");
    ParsedLabel out;
    out.kind = label[0] == 'G' ? TableKind::Ito : TableKind::Strat;
    const std::string body = label.substr(1);
    const auto sep = body.find('_');
    if (sep != std::string::npos) {
        out.a = parse_index(body.substr(0, sep), label);
        out.b = parse_index(body.substr(sep + 1), label);
    } else {
        if (body.size() != 2)
            throw SchemaError("block label '" + label + "' needs an underscore between indices");
        out.a = parse_index(body.substr(0, 1), label);
        out.b = parse_index(body.substr(1, 1), label);
    }
    return out;
}

} // namespace

std::string block_label(TableKind kind, int a, int b, int channels) {
    std::string label(1, kind == TableKind::Ito ? 'G' : 'E');
    if (channels == 1)
        label += std::to_string(a) + std::to_string(b);
    else
        label += std::to_string(a) + "_" + std::to_string(b);
    return label;
}

Json complex_to_json(cx z) { return Json::array({z.real(), z.imag()}); }

cx complex_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2)
        throw SchemaError(where + " must be a [re, im] pair");
    return {number_at(j[0], where), number_at(j[1], where)};
}

Json matrix_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw SchemaError(where + " must be a non-empty array of rows");
    const auto rows = j.size();
    const auto cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw SchemaError(where + " rows must be non-empty arrays");
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw SchemaError(where + " has ragged rows");
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                complex_from_json(j[i][k], where);
    }
    return m;
}

Json coefficients_to_json(const CoefficientBlock& table, TableKind kind,
                          const std::optional<GaugeParameter>& kappa) {
    if (kind == TableKind::Strat && !kappa)
        throw SchemaError("a time-ordered table needs its gauge recorded");
    Json j;
    j["d"] = table.dim();
    j["channels"] = table.channels();
    if (kind == TableKind::Strat) j["kappa"] = complex_to_json(kappa->value());
    Json blocks = Json::object();
    for (int a = 0; a <= table.channels(); ++a)
        for (int b = 0; b <= table.channels(); ++b) {
            if (table.block(a, b).norm() == 0.0 && (a != 0 || b != 0)) continue;
            blocks[block_label(kind, a, b, table.channels())] = matrix_to_json(table.block(a, b));
        }
    j["blocks"] = std::move(blocks);
    return j;
}

CoefficientFile coefficients_from_json(const Json& j) {
    if (!j.is_object()) throw SchemaError("coefficient file must be a JSON object");
    static const std::set<std::string> known{"d", "channels", "kappa", "blocks"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw SchemaError("unknown key '" + item.key() + "' in coefficient file");
    if (!j.contains("d") || !j["d"].is_number_integer() || j["d"].get<int>() < 1)
        throw SchemaError("'d' must be a positive integer");
    if (!j.contains("channels") || !j["channels"].is_number_integer() ||
        j["channels"].get<int>() < 1)
        throw SchemaError("'channels' must be a positive integer");
    if (!j.contains("blocks") || !j["blocks"].is_object() || j["blocks"].empty())
        throw SchemaError("'blocks' must be a non-empty object");

    const int d = j["d"].get<int>();
    const int n = j["channels"].get<int>();

    CoefficientFile out;
    out.table = CoefficientBlock(d, n);
    bool first = true;
    for (const auto& item : j["blocks"].items()) {
        ParsedLabel label = parse_label(item.key());
        if (first) {
            out.kind = label.kind;
            first = false;
        } else if (label.kind != out.kind) {
            throw SchemaError("mixed G and E block labels; a file carries one table");
        }
        if (label.a > n || label.b > n)
            throw SchemaError("block '" + item.key() + "' is outside the " +
                              std::to_string(n) + "-channel table");
        Mat m = matrix_from_json(item.value(), "block '" + item.key() + "'");
        if (m.rows() != d || m.cols() != d)
            throw SchemaError("block '" + item.key() + "' is not " + std::to_string(d) + "x" +
                              std::to_string(d));
        out.table.block(label.a, label.b) = std::move(m);
    }

    if (out.kind == TableKind::Strat) {
        if (!j.contains("kappa"))
            throw SchemaError("a time-ordered (E) file must record its gauge 'kappa'");
        cx kappa = complex_from_json(j["kappa"], "'kappa'");
        if (kappa.real() != 0.5)
            throw SchemaError("'kappa' must have real part exactly 1/2; only the imaginary "
                              "part is a free gauge choice");
        out.kappa = GaugeParameter(kappa);
    } else if (j.contains("kappa")) {
        throw SchemaError("an Ito (G) file is gauge-free; 'kappa' does not belong here");
    }
    return out;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

CoefficientFile read_coefficient_file(const std::string& path) {
    try {
        return coefficients_from_json(read_json_file(path));
    } catch (const SchemaError& e) {
        throw SchemaError("'" + path + "': " + e.what());
    }
}

void write_coefficient_file(const std::string& path, const CoefficientBlock& table,
                            TableKind kind, const std::optional<GaugeParameter>& kappa) {
    write_json_file(path, coefficients_to_json(table, kind, kappa));
}

std::string sweep_csv(const SweepResult& r) {
    std::string body = "dt,abs_error_ito,abs_error_ed_target,abs_error_sd_target\n";
    for (const SweepRow& row : r.rows)
        body += fmt_double(row.dt) + "," + fmt_double(row.err_ito) + "," +
                fmt_double(row.err_ed) + "," + fmt_double(row.err_sd) + "\n";
    return body;
}

std::string wz_csv(const WzResult& r) {
    std::string body = "lambda,mean_err,max_err,n_seeds\n";
    for (const WzRow& row : r.rows)
        body += fmt_double(row.lambda) + "," + fmt_double(row.mean_err) + "," +
                fmt_double(row.max_err) + "," + std::to_string(row.n_seeds) + "\n";
    return body;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << body;
}

} // namespace qstoch
