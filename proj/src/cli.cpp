#include "dcloss/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

#include "dcloss/decomposition.hpp"
#include "dcloss/netlist.hpp"
#include "dcloss/potentials.hpp"
#include "dcloss/reconfig.hpp"
#include "dcloss/sensitivity.hpp"
#include "dcloss/solver.hpp"

namespace dcloss::cli {

namespace {

// ---------------------------------------------------------------------------
// Minimal JSON emitter.  Key order is insertion order and doubles print with
// 17 significant digits, so a report is byte-identical for identical input.
// ---------------------------------------------------------------------------

struct Json;
using JsonArray = std::vector<Json>;
using JsonObject = std::vector<std::pair<std::string, Json>>;

struct Json {
    std::variant<std::nullptr_t, bool, double, std::string, JsonArray, JsonObject> value =
        nullptr;

    Json() = default;
    Json(std::nullptr_t) {}
    Json(bool b) : value(b) {}
    Json(double d) : value(d) {}
    Json(int i) : value(static_cast<double>(i)) {}
    Json(const char* s) : value(std::string(s)) {}
    Json(std::string s) : value(std::move(s)) {}
    Json(JsonArray a) : value(std::move(a)) {}
    Json(JsonObject o) : value(std::move(o)) {}

    Json& set(const std::string& key, Json v) {
        std::get<JsonObject>(value).push_back({key, std::move(v)});
        return *this;
    }
    Json& push(Json v) {
        std::get<JsonArray>(value).push_back(std::move(v));
        return *this;
    }
    static Json object() { return Json(JsonObject{}); }
    static Json array() { return Json(JsonArray{}); }
};

void write_json(std::ostream& out, const Json& j) {
    struct Visitor {
        std::ostream& out;
        void operator()(std::nullptr_t) { out << "null"; }
        void operator()(bool b) { out << (b ? "true" : "false"); }
        void operator()(double d) {
            if (!std::isfinite(d)) {
                throw Error(ErrorCode::ConstraintInconsistent,
                            "refusing to emit a non-finite number in a report");
            }
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", d);
            out << buf;
        }
        void operator()(const std::string& s) {
            out << '"';
            for (char ch : s) {
                switch (ch) {
                    case '"': out << "\\\""; break;
                    case '\\': out << "\\\\"; break;
                    case '\n': out << "\\n"; break;
                    case '\t': out << "\\t"; break;
                    case '\r': out << "\\r"; break;
                    default:
                        if (static_cast<unsigned char>(ch) < 0x20) {
                            char buf[8];
                            std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                            out << buf;
                        } else {
                            out << ch;
                        }
                }
            }
            out << '"';
        }
        void operator()(const JsonArray& a) {
            out << '[';
            for (size_t i = 0; i < a.size(); ++i) {
                if (i) out << ',';
                std::visit(Visitor{out}, a[i].value);
            }
            out << ']';
        }
        void operator()(const JsonObject& o) {
            out << '{';
            for (size_t i = 0; i < o.size(); ++i) {
                if (i) out << ',';
                std::visit(Visitor{out}, Json(o[i].first).value);
                out << ':';
                std::visit(Visitor{out}, o[i].second.value);
            }
            out << '}';
        }
    };
    std::visit(Visitor{out}, j.value);
    out << '\n';
}

std::string fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json map_to_json(const std::map<std::string, double>& m) {
    Json o = Json::object();
    for (const auto& [k, v] : m) o.set(k, v);
    return o;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push(m(i, j));
        rows.push(std::move(row));
    }
    return rows;
}

Json ids_to_json(const std::vector<std::string>& ids) {
    Json a = Json::array();
    for (const std::string& id : ids) a.push(id);
    return a;
}

Json sub_quantity(const SubQuantity& q) {
    Json o = Json::object();
    if (q.cv) o.set("cv", *q.cv);
    if (q.ci) o.set("ci", *q.ci);
    return o;
}

Json delta_report(const TopologyEdit& edit, const DeltaLossReport& rep) {
    Json o = Json::object();
    o.set("edit", format_edit(edit));
    o.set("classified", edit_class_name(rep.classified));
    o.set("dp_predicted", rep.dp_predicted);
    o.set("dp_v", rep.dp_v);
    o.set("dp_i", rep.dp_i);
    o.set("dp_oracle", rep.dp_oracle);
    o.set("agreement", rep.agreement);
    o.set("i_before", sub_quantity(rep.i_before));
    o.set("v_before", sub_quantity(rep.v_before));
    o.set("i_after", sub_quantity(rep.i_after));
    o.set("v_after", sub_quantity(rep.v_after));
    return o;
}

// ---------------------------------------------------------------------------
// Command payloads
// ---------------------------------------------------------------------------

Json payload_solve(const Circuit& c) {
    Solution s = solve(c);
    Json o = Json::object();
    o.set("reference", s.reference);
    o.set("total_loss", s.total_loss);
    o.set("potentials", map_to_json(s.potentials));
    o.set("currents", map_to_json(s.currents));
    o.set("consumed", map_to_json(s.consumed));
    return o;
}

Json payload_decompose(const Circuit& c) {
    SuperpositionReport r = superposition_check(c);
    Json o = Json::object();
    o.set("p_total", r.p_total);
    o.set("p_v", r.p_v);
    o.set("p_i", r.p_i);
    o.set("residual", r.residual);
    o.set("cross_term", r.cross_term);
    o.set("current_identity_residual", r.current_identity_residual);
    return o;
}

Json payload_potentials(const Circuit& c) {
    std::vector<LossResult> results = compute_all_losses(c);
    Json methods = Json::array();
    double max_rel = 0.0;
    double scale = 0.0;
    for (const LossResult& r : results) scale = std::max(scale, std::abs(r.loss));
    for (const LossResult& r : results) {
        Json m = Json::object();
        m.set("method", loss_method_name(r.method));
        m.set("loss", r.loss);
        Json witness = Json::object();
        for (const auto& [name, value] : r.witness) witness.set(name, value);
        m.set("witness", std::move(witness));
        methods.push(std::move(m));
        for (const LossResult& other : results) {
            max_rel = std::max(max_rel, std::abs(r.loss - other.loss) / std::max(scale, 1e-300));
        }
    }
    Json o = Json::object();
    o.set("methods", std::move(methods));
    o.set("max_pairwise_relative_difference", max_rel);
    return o;
}

Json payload_sensitivities(const Circuit& c) {
    SourceFactorMatrix m = source_factors(c);
    Json o = Json::object();
    o.set("voltage_sources", ids_to_json(m.voltage_sources));
    o.set("current_sources", ids_to_json(m.current_sources));
    o.set("svv", matrix_to_json(m.svv));
    o.set("svi", matrix_to_json(m.svi));
    o.set("siv", matrix_to_json(m.siv));
    o.set("sii", matrix_to_json(m.sii));
    o.set("reciprocity_residual", reciprocity_residual(m));
    return o;
}

Json payload_equivalent(const Circuit& c, const std::string& m, const std::string& n,
                        EquivalentKind kind) {
    Equivalent eq = equivalent(c, m, n, kind);
    Json o = Json::object();
    o.set("kind", equivalent_kind_name(eq.kind));
    o.set("terminals", Json::array().push(eq.terminals.first).push(eq.terminals.second));
    if (kind != EquivalentKind::Norton) o.set("v_eq", eq.v_eq);
    if (kind != EquivalentKind::Thevenin) o.set("i_eq", eq.i_eq);
    o.set("r_eq", eq.r_eq);
    return o;
}

Json payload_whatif(const Circuit& c, const std::string& edit_spec) {
    TopologyEdit edit = parse_edit(edit_spec);
    DeltaLossReport rep = predict_delta(c, edit);
    return delta_report(edit, rep);
}

Json payload_rank(const Circuit& c, const std::string& candidates_text) {
    std::vector<TopologyEdit> candidates;
    std::istringstream in(candidates_text);
    std::string raw;
    while (std::getline(in, raw)) {
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        bool blank = raw.find_first_not_of(" \t") == std::string::npos;
        if (!blank) candidates.push_back(parse_edit(raw));
    }
    Ranking ranking = rank_switchings(c, candidates);
    Json ranked = Json::array();
    for (const RankedEdit& r : ranking.ranked) ranked.push(delta_report(r.edit, r.report));
    Json excluded = Json::array();
    for (const ExcludedEdit& e : ranking.excluded) {
        Json o = Json::object();
        o.set("edit", format_edit(e.edit));
        o.set("code", error_code_name(e.code));
        o.set("message", e.message);
        excluded.push(std::move(o));
    }
    Json o = Json::object();
    o.set("ranked", std::move(ranked));
    o.set("excluded", std::move(excluded));
    return o;
}

struct VerifyOutcome {
    Json payload;
    bool all_pass = true;
};

VerifyOutcome payload_verify(const Circuit& c) {
    VerifyOutcome outcome;
    Json checks = Json::array();
    auto check = [&](const std::string& name, double value, double threshold) {
        bool pass = value <= threshold;
        outcome.all_pass = outcome.all_pass && pass;
        Json o = Json::object();
        o.set("name", name);
        o.set("value", value);
        o.set("threshold", threshold);
        o.set("pass", pass);
        checks.push(std::move(o));
    };

    ValidationReport report = validate(c);
    check("validation", static_cast<double>(report.faults.size()), 0.0);
    if (report.well_posed) {
        Solution s = solve(c);
        check("kcl_residual", kcl_residual(c, s), 1e-12);
        check("energy_balance", energy_residual(s), 1e-12);

        SuperpositionReport sup = superposition_check(c);
        check("loss_superposition", sup.residual / std::max(std::abs(sup.p_total), 1e-300), 1e-9);
        double current_scale = 0.0;
        for (const auto& [_, i] : s.currents) current_scale = std::max(current_scale, std::abs(i));
        check("current_superposition",
              sup.current_identity_residual / std::max(current_scale, 1e-300), 1e-12);

        double iv_norm = 0.0;
        double ii_norm = 0.0;
        double max_r = 0.0;
        Decomposition dec = decompose(c);
        Solution sv = solve(dec.cv);
        Solution si = solve(dec.ci);
        for (const Element& e : c.elements) {
            if (e.kind != ElementKind::Resistor) continue;
            iv_norm += sv.currents.at(e.id) * sv.currents.at(e.id);
            ii_norm += si.currents.at(e.id) * si.currents.at(e.id);
            max_r = std::max(max_r, e.value);
        }
        double bound = std::sqrt(iv_norm) * std::sqrt(ii_norm) * max_r;
        check("orthogonality", std::abs(sup.cross_term) / std::max(bound, 1e-300),
              bound > 0.0 ? 1e-12 : 1.0);

        std::vector<LossResult> losses = compute_all_losses(c);
        double scale = 0.0;
        double max_diff = 0.0;
        for (const LossResult& r : losses) scale = std::max(scale, std::abs(r.loss));
        for (const LossResult& a : losses) {
            for (const LossResult& b : losses) max_diff = std::max(max_diff, std::abs(a.loss - b.loss));
        }
        check("method_agreement", max_diff / std::max(scale, 1e-300), 1e-9);

        check("reciprocity", reciprocity_residual(source_factors(c)), 1e-9);
    } else {
        outcome.all_pass = false;
        Json faults = Json::array();
        for (const Fault& f : report.faults) {
            Json o = Json::object();
            o.set("code", fault_code_name(f.code));
            o.set("elements", ids_to_json(f.elements));
            o.set("message", f.message);
            faults.push(std::move(o));
        }
        outcome.payload = Json::object();
        outcome.payload.set("checks", std::move(checks));
        outcome.payload.set("faults", std::move(faults));
        outcome.payload.set("all_pass", false);
        return outcome;
    }
    outcome.payload = Json::object();
    outcome.payload.set("checks", std::move(checks));
    outcome.payload.set("all_pass", outcome.all_pass);
    return outcome;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CLI::ValidationError("input", "cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit(std::ostream& out, const std::string& command, const std::string& digest, Json payload,
          const std::vector<std::string>& warnings) {
    Json doc = Json::object();
    doc.set("schema", 1);
    doc.set("command", command);
    doc.set("input_digest", digest);
    doc.set("warnings", ids_to_json(warnings));
    doc.set("payload", std::move(payload));
    write_json(out, doc);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"steady-state DC circuit loss analysis"};
    app.require_subcommand(1);

    std::string input;
    bool grid = false;
    std::vector<std::string> terminals;
    std::string kind_name;
    std::string edit_spec;
    std::string candidates_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("input", input, "netlist file")->required();
        sub->add_flag("--grid", grid, "treat the input as a grid case (BUS/BRANCH lines)");
    };

    CLI::App* cmd_solve = app.add_subcommand("solve", "operating point and total loss");
    add_common(cmd_solve);
    CLI::App* cmd_decompose =
        app.add_subcommand("decompose", "sub-circuit losses and superposition residuals");
    add_common(cmd_decompose);
    CLI::App* cmd_potentials =
        app.add_subcommand("potentials", "total loss by the four equivalent methods");
    add_common(cmd_potentials);
    CLI::App* cmd_sensitivities =
        app.add_subcommand("sensitivities", "source factor blocks and reciprocity residual");
    add_common(cmd_sensitivities);
    CLI::App* cmd_equivalent =
        app.add_subcommand("equivalent", "two-terminal equivalent circuit");
    add_common(cmd_equivalent);
    cmd_equivalent->add_option("--terminals", terminals, "terminal pair m n")
        ->expected(2)
        ->required();
    cmd_equivalent->add_option("--kind", kind_name, "thevenin, norton or mixed")->required();
    CLI::App* cmd_whatif = app.add_subcommand("whatif", "predicted loss change of one edit");
    add_common(cmd_whatif);
    cmd_whatif->add_option("--edit", edit_spec, "edit spec, e.g. `remove r2`")->required();
    CLI::App* cmd_rank = app.add_subcommand("rank", "rank candidate edits by predicted loss change");
    add_common(cmd_rank);
    cmd_rank->add_option("--candidates", candidates_path, "file with one edit spec per line")
        ->required();
    CLI::App* cmd_verify = app.add_subcommand("verify", "run the invariant suite on a circuit");
    add_common(cmd_verify);

    std::vector<const char*> argv;
    argv.push_back("dcloss");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    std::string text;
    try {
        text = read_file(input);
    } catch (const CLI::Error& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }
    std::string digest = fnv1a64(text);
    std::string command = app.get_subcommands().front()->get_name();

    try {
        Circuit c = grid ? import_grid(parse_grid(text)) : parse_netlist(text);
        std::vector<std::string> warnings;

        if (command == "verify") {
            VerifyOutcome outcome = payload_verify(c);
            emit(out, command, digest, std::move(outcome.payload), warnings);
            return outcome.all_pass ? 0 : 1;
        }

        require_well_posed(c);
        Json payload;
        if (command == "solve") {
            payload = payload_solve(c);
        } else if (command == "decompose") {
            Decomposition dec = decompose(c);
            for (const std::string& n : dec.dropped_nodes) {
                warnings.push_back("node '" + n + "' is isolated in the voltage sub-circuit");
            }
            payload = payload_decompose(c);
        } else if (command == "potentials") {
            payload = payload_potentials(c);
        } else if (command == "sensitivities") {
            payload = payload_sensitivities(c);
        } else if (command == "equivalent") {
            EquivalentKind kind;
            if (kind_name == "thevenin") kind = EquivalentKind::Thevenin;
            else if (kind_name == "norton") kind = EquivalentKind::Norton;
            else if (kind_name == "mixed") kind = EquivalentKind::Mixed;
            else {
                err << "usage error: unknown equivalent kind '" << kind_name << "'\n";
                return 2;
            }
            payload = payload_equivalent(c, terminals[0], terminals[1], kind);
        } else if (command == "whatif") {
            payload = payload_whatif(c, edit_spec);
        } else if (command == "rank") {
            payload = payload_rank(c, read_file(candidates_path));
        } else {
            err << "usage error: unknown command '" << command << "'\n";
            return 2;
        }
        emit(out, command, digest, std::move(payload), warnings);
        return 0;
    } catch (const CLI::Error& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        Json error = Json::object();
        error.set("code", error_code_name(e.code()));
        error.set("message", e.what());
        Json doc = Json::object();
        doc.set("schema", 1);
        doc.set("command", command);
        doc.set("input_digest", digest);
        doc.set("error", std::move(error));
        write_json(out, doc);
        return 1;
    }
}

} // namespace dcloss::cli
