#include "tailica/cli.hpp"

#include "tailica/entropy.hpp"
#include "tailica/error.hpp"
#include "tailica/eval.hpp"
#include "tailica/ica.hpp"
#include "tailica/io.hpp"
#include "tailica/panel.hpp"
#include "tailica/tailcov.hpp"
#include "tailica/whiten.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

namespace tailica {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string scalar_text(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    return value.dump();
}

// key=value text as CLI11 reads it, or the manifest.json of an earlier run
// when the document starts with '{'. Items without a section go to `command`.
class ManifestConfig : public CLI::ConfigBase {
public:
    explicit ManifestConfig(std::string command) : command_(std::move(command)) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        const std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
        const auto start = text.find_first_not_of(" \t\r\n");
        std::vector<CLI::ConfigItem> items;
        if (start == std::string::npos || text[start] != '{') {
            std::istringstream plain(text);
            items = ConfigBase::from_config(plain);
        } else {
            items = from_manifest(text);
        }
        for (auto& item : items)
            if (item.parents.empty() && !command_.empty()) item.parents.push_back(command_);
        return items;
    }

private:
    std::vector<CLI::ConfigItem> from_manifest(const std::string& text) const {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            throw CLI::FileError(std::string("malformed manifest: ") + e.what());
        }
        if (!doc.contains("parameters") || !doc["parameters"].is_object())
            throw CLI::FileError("manifest has no \"parameters\" object");
        if (doc.contains("command") && doc["command"] != command_)
            throw CLI::FileError("manifest was written by `" + scalar_text(doc["command"]) + "`, not `" + command_ + "`");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : doc["parameters"].items()) {
            CLI::ConfigItem item;
            item.name = key;
            if (value.is_array()) {
                for (const auto& element : value) item.inputs.push_back(scalar_text(element));
            } else if (!value.is_null()) {
                item.inputs.push_back(scalar_text(value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

    std::string command_;
};

// First token naming a subcommand, skipping the root's own options.
std::string command_name(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            ++i;
            continue;
        }
        if (!args[i].starts_with("-")) return args[i];
    }
    return {};
}

const CLI::Validator kIsoDate(
    [](std::string& text) { return is_iso_date(text) ? std::string{} : "not a YYYY-MM-DD date: " + text; }, "DATE");

std::vector<std::string> split_default(const std::string& text) {
    std::string_view body = io::trim(text);
    if (body == "{}") return {};
    if (body.size() >= 2 && body.front() == '[' && body.back() == ']') {
        std::vector<std::string> out;
        for (auto& part : io::split_csv_line(body.substr(1, body.size() - 2)))
            if (!part.empty()) out.push_back(part);
        return out;
    }
    if (body.empty()) return {};
    return {std::string(body)};
}

// Every option of `sub` with its effective value, defaults included. Entries
// of `resolved` replace values that were worked out at run time.
json effective_parameters(const CLI::App& sub, const std::map<std::string, json>& resolved) {
    json params = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt == sub.get_help_ptr()) continue;
        const std::string name = opt->get_single_name();
        if (const auto it = resolved.find(name); it != resolved.end()) {
            params[name] = it->second;
            continue;
        }
        std::vector<std::string> values;
        if (opt->get_expected_max() == 0) {
            values.push_back(opt->count() > 0 && opt->as<bool>() ? "true" : "false");
        } else if (opt->count() > 0) {
            values = opt->results();
        } else {
            values = split_default(opt->get_default_str());
        }
        std::erase(values, std::string{});
        if (values.empty()) continue;
        if (opt->get_items_expected_max() > 1)
            params[name] = values;
        else
            params[name] = values.front();
    }
    return params;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    body(out);
    out.flush();
    if (!out) throw DataError("write failed: " + path.string());
}

void write_manifest(const fs::path& path, const CLI::App& sub, const std::map<std::string, json>& resolved,
                    const std::vector<std::string>& outputs) {
    json doc = {{"tool", "tailica"},
                {"manifest_version", 1},
                {"command", sub.get_name()},
                {"parameters", effective_parameters(sub, resolved)},
                {"outputs", outputs}};
    write_file(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

fs::path sidecar_manifest(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

void write_histogram(const Histogram& h, const fs::path& path) {
    write_file(path, [&](std::ostream& out) {
        out << "bin_left,bin_right,count\n";
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            out << io::format_double(h.edges[i]) << ',' << io::format_double(h.edges[i + 1]) << ',' << h.counts[i]
                << '\n';
    });
}

// ---------------------------------------------------------------------------
// Shared option groups

struct PanelArgs {
    std::string input;
    std::string format = "auto";
    bool fill_missing = false;
};

void add_panel_options(CLI::App& sub, PanelArgs& args) {
    sub.add_option("--input", args.input, "Return panel CSV: long `date,symbol,return` or wide `date,<symbol>,...`")
        ->required()
        ->check(CLI::ExistingFile);
    sub.add_option("--format", args.format, "Input layout; auto reads it from the header")
        ->check(CLI::IsMember({"auto", "long", "wide"}));
    sub.add_flag("--fill-missing", args.fill_missing,
                 "Long format: zero-fill absent (date, symbol) cells instead of dropping the symbol");
}

SamplePanel load_panel(const PanelArgs& args, std::ostream& err) {
    IngestResult result = [&] {
        if (args.format == "wide") return IngestResult{ingest_wide_csv(args.input), {}, 0};
        if (args.format == "long") return ingest_csv(args.input, args.fill_missing);
        return ingest_any_csv(args.input, args.fill_missing);
    }();
    if (!result.dropped_symbols.empty()) {
        err << "tailica: note: dropped " << result.dropped_symbols.size() << " symbol(s) with missing dates:";
        for (const auto& s : result.dropped_symbols) err << ' ' << s;
        err << '\n';
    }
    if (result.filled_cells > 0) err << "tailica: note: zero-filled " << result.filled_cells << " missing cell(s)\n";
    return std::move(result.panel);
}

struct EntropyArgs {
    std::string method = "correa";
    std::size_t window = 0;

    EntropyEstimatorConfig config() const { return {parse_entropy_method(method), window}; }
};

void add_entropy_options(CLI::App& sub, EntropyArgs& args) {
    sub.add_option("--entropy", args.method, "Spacing entropy estimator")
        ->check(CLI::IsMember({"vasicek", "ebrahimi", "correa"}));
    sub.add_option("--window", args.window, "Spacing order n; 0 means floor(sqrt(m))")->check(CLI::NonNegativeNumber);
}

bool is_constant(std::span<const double> column) {
    return std::all_of(column.begin(), column.end(), [&](double v) { return v == column.front(); });
}

// ---------------------------------------------------------------------------
// Subcommands

struct IngestArgs {
    PanelArgs panel;
    std::string out;
};

void run_ingest(const CLI::App& sub, const IngestArgs& args, std::ostream& out, std::ostream& err) {
    const SamplePanel panel = load_panel(args.panel, err);
    write_file(args.out, [&](std::ostream& o) { write_wide_csv(panel, o); });
    write_manifest(sidecar_manifest(args.out), sub, {}, {args.out});
    out << "ingested " << panel.rows() << " dates x " << panel.cols() << " symbols (" << panel.row_ids().front()
        << " .. " << panel.row_ids().back() << ")\n";
}

struct SynthArgs {
    SyntheticMarketSpec spec;
    std::string out;
};

void run_synth(const CLI::App& sub, const SynthArgs& args, std::ostream& out) {
    validate(args.spec);
    const SamplePanel panel = generate_market(args.spec);
    write_file(args.out, [&](std::ostream& o) { write_wide_csv(panel, o); });
    write_manifest(sidecar_manifest(args.out), sub, {}, {args.out});
    out << "wrote " << panel.rows() << " dates x " << panel.cols() << " assets to " << args.out << '\n';
}

struct FitArgs {
    PanelArgs panel;
    std::string boundary;
    Eigen::Index d = 20;
    std::vector<int> k{2, 10};
    std::uint64_t seed = 1;
    double tol = 1e-8;
    int max_iter = 1000;
    bool standardize = false;
    double eig_floor = 1e-10;
    EntropyArgs entropy;
    std::string out;
};

void write_report_histograms(const TailReport& report, const fs::path& dir, std::vector<std::string>& outputs) {
    const std::string suffix = "k" + std::to_string(report.k) + "_" + report.bucket + ".csv";
    write_histogram(report.pooled.histogram, dir / ("hist_" + suffix));
    write_histogram(report.portfolio.histogram, dir / ("portfolio_hist_" + suffix));
    outputs.push_back("hist_" + suffix);
    outputs.push_back("portfolio_hist_" + suffix);
}

void run_fit(const CLI::App& sub, const FitArgs& args, std::ostream& out, std::ostream& err) {
    const SamplePanel panel = load_panel(args.panel, err);
    const std::string boundary = args.boundary.empty() ? midpoint_boundary(panel) : args.boundary;

    ExperimentOptions options;
    options.d = args.d;
    options.k_list = args.k;
    options.entropy = args.entropy.config();
    options.seed = args.seed;
    options.tol = args.tol;
    options.max_iter = args.max_iter;
    options.whitening.eig_floor = args.eig_floor;
    options.whitening.standardize = args.standardize;
    const ExperimentResult result = run_experiment(panel, boundary, options);

    const fs::path dir = args.out;
    fs::create_directories(dir);
    std::vector<std::string> outputs{"whitening.csv", "report.json"};
    write_whitening(result.whitening, dir / "whitening.csv");
    for (const auto& fit : result.fits) {
        const std::string name = "W_k" + std::to_string(fit.k) + ".csv";
        write_unmixing(fit.unmixing, dir / name);
        outputs.push_back(name);
        write_report_histograms(fit.in_sample, dir, outputs);
        write_report_histograms(fit.out_sample, dir, outputs);
    }
    write_file(dir / "report.json", [&](std::ostream& o) { o << to_json(result).dump(2) << '\n'; });
    write_manifest(dir / "manifest.json", sub, {{"boundary", boundary}}, outputs);

    if (result.whitening.reduced())
        err << "tailica: note: whitening kept " << result.whitening.d() << " of " << result.whitening.requested_d
            << " requested directions (eigenvalue floor)\n";
    out << "boundary " << boundary << ": " << result.in_rows << " in-sample, " << result.out_rows
        << " out-of-sample rows, d=" << result.whitening.d() << '\n';
    for (const auto& fit : result.fits) {
        if (!fit.unmixing.converged)
            err << "tailica: warning: k=" << fit.k << " did not converge in " << fit.unmixing.iterations
                << " iterations; the last iterate was written\n";
        out << "k=" << fit.k << " iterations=" << fit.unmixing.iterations
            << " converged=" << (fit.unmixing.converged ? "true" : "false")
            << " out-of-sample |q0.999|=" << io::format_double(fit.out_sample.pooled.abs_q999)
            << " central_mass=" << io::format_double(fit.out_sample.pooled.central_mass) << '\n';
    }
}

struct EvalArgs {
    PanelArgs panel;
    std::string run;
    std::vector<int> k;
    std::string boundary;
    std::string bucket = "out";
    EntropyArgs entropy;
    std::string out;
};

std::vector<int> unmixing_orders(const fs::path& run) {
    std::vector<int> ks;
    for (const auto& entry : fs::directory_iterator(run)) {
        const std::string name = entry.path().filename().string();
        if (!name.starts_with("W_k") || !name.ends_with(".csv")) continue;
        const std::string digits = name.substr(3, name.size() - 7);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
            continue;
        ks.push_back(std::stoi(digits));
    }
    if (ks.empty()) throw DataError("no W_k<k>.csv files in " + run.string());
    std::sort(ks.begin(), ks.end());
    return ks;
}

// Boundary recorded in the fit's report, else the panel midpoint.
std::string fit_boundary(const fs::path& run, const SamplePanel& panel) {
    const fs::path report = run / "report.json";
    if (!fs::exists(report)) return midpoint_boundary(panel);
    std::ifstream in(report);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("cannot parse " + report.string() + ": " + e.what());
    }
    if (!doc.contains("boundary") || !doc["boundary"].is_string())
        throw DataError(report.string() + " has no boundary");
    return doc["boundary"].get<std::string>();
}

void run_eval(const CLI::App& sub, const EvalArgs& args, std::ostream& out, std::ostream& err) {
    const SamplePanel panel = load_panel(args.panel, err);
    const fs::path run = args.run;
    const WhiteningTransform whitening = read_whitening(run / "whitening.csv");
    const std::vector<int> ks = args.k.empty() ? unmixing_orders(run) : args.k;

    std::map<std::string, json> resolved;
    json k_values = json::array();
    for (int k : ks) k_values.push_back(std::to_string(k));
    resolved["k"] = k_values;
    std::optional<SamplePanel> bucket_panel;
    if (args.bucket == "all") {
        bucket_panel = panel;
    } else {
        const std::string boundary = args.boundary.empty() ? fit_boundary(run, panel) : args.boundary;
        resolved["boundary"] = boundary;
        BucketSplit split = split_buckets(panel, boundary);
        bucket_panel = args.bucket == "in" ? std::move(split.in_sample) : std::move(split.out_sample);
    }
    const SamplePanel white = apply_whitening(whitening, *bucket_panel);

    const fs::path dir = args.out;
    fs::create_directories(dir);
    std::vector<std::string> outputs{"report.json"};
    json reports = json::array();
    for (int k : ks) {
        const UnmixingMatrix W = read_unmixing(run / ("W_k" + std::to_string(k) + ".csv"));
        if (W.k != k) throw DataError("W_k" + std::to_string(k) + ".csv holds a fit for k=" + std::to_string(W.k));
        const TailReport report = tail_report(transform(W, white), k, args.bucket, args.entropy.config());
        write_report_histograms(report, dir, outputs);
        reports.push_back(to_json(report));
        out << "k=" << k << " bucket=" << args.bucket << " |q0.999|=" << io::format_double(report.pooled.abs_q999)
            << " central_mass=" << io::format_double(report.pooled.central_mass) << '\n';
    }
    json doc = {{"bucket", args.bucket}, {"rows", bucket_panel->rows()}, {"d", whitening.d()}, {"reports", reports}};
    if (resolved.contains("boundary")) doc["boundary"] = resolved["boundary"];
    write_file(dir / "report.json", [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
    write_manifest(dir / "manifest.json", sub, resolved, outputs);
}

struct TransformArgs {
    PanelArgs panel;
    std::string whitening;
    std::string unmixing;
    std::string out;
};

void run_transform(const CLI::App& sub, const TransformArgs& args, std::ostream& out, std::ostream& err) {
    const SamplePanel panel = load_panel(args.panel, err);
    const SamplePanel white = apply_whitening(read_whitening(fs::path(args.whitening)), panel);
    const SamplePanel result = args.unmixing.empty() ? white : transform(read_unmixing(fs::path(args.unmixing)), white);
    write_file(args.out, [&](std::ostream& o) { write_wide_csv(result, o); });
    write_manifest(sidecar_manifest(args.out), sub, {}, {args.out});
    out << "wrote " << result.rows() << " x " << result.cols() << " to " << args.out << '\n';
}

struct EntropyCmdArgs {
    PanelArgs panel;
    EntropyArgs entropy;
    std::string out;
};

void run_entropy(const CLI::App& sub, const EntropyCmdArgs& args, std::ostream& out, std::ostream& err) {
    const SamplePanel panel = load_panel(args.panel, err);
    const EntropyEstimatorConfig config = args.entropy.config();
    std::size_t written = 0;
    write_file(args.out, [&](std::ostream& o) {
        o << "symbol,entropy,method,window,m,ties_perturbed\n";
        for (Eigen::Index j = 0; j < panel.cols(); ++j) {
            const auto& id = panel.column_ids()[static_cast<std::size_t>(j)];
            if (is_constant(panel.column(j))) {
                err << "tailica: note: skipped constant column " << id << '\n';
                continue;
            }
            const EntropyEstimate e = estimate_entropy(panel.column(j), config);
            o << id << ',' << io::format_double(e.value) << ',' << to_string(e.method) << ',' << e.window_n << ','
              << e.m << ',' << e.ties_perturbed << '\n';
            ++written;
        }
    });
    write_manifest(sidecar_manifest(args.out), sub, {}, {args.out});
    out << "wrote " << written << " entropy estimate(s) to " << args.out << '\n';
}

struct TailcovArgs {
    PanelArgs panel;
    int k = 2;
    bool limit = false;
    int bootstrap = 0;
    std::uint64_t seed = 1;
    std::string se_out;
    std::string out;
};

void run_tailcov(const CLI::App& sub, const TailcovArgs& args, std::ostream& out, std::ostream& err) {
    if (args.bootstrap > 0 && args.se_out.empty()) throw std::invalid_argument("--bootstrap needs --se-out");
    const SamplePanel panel = center(load_panel(args.panel, err));
    std::vector<std::string> outputs{args.out};
    if (args.limit) {
        const OverlapMatrix overlap = max_overlap_covariance(panel);
        write_file(args.out, [&](std::ostream& o) { write_matrix_csv(overlap.values, overlap.ids, o); });
        const auto ties = std::count(overlap.tied_column.begin(), overlap.tied_column.end(), true);
        if (ties > 0) err << "tailica: note: " << ties << " column(s) reach their max |x| on several dates\n";
    } else {
        const TailCovarianceMatrix T = tail_covariance(panel, args.k);
        write_file(args.out, [&](std::ostream& o) { write_matrix_csv(T.values, T.ids, o); });
        const OffDiagonalSummary summary = off_diagonal_summary(T.values);
        out << "k=" << args.k << " off-diagonal max |T|=" << io::format_double(summary.max_abs)
            << " frobenius=" << io::format_double(summary.frobenius) << '\n';
    }
    if (args.bootstrap > 0) {
        const Eigen::MatrixXd se = tail_covariance_bootstrap_se(panel, args.k, args.bootstrap, args.seed);
        write_file(args.se_out, [&](std::ostream& o) { write_matrix_csv(se, panel.column_ids(), o); });
        outputs.push_back(args.se_out);
    }
    write_manifest(sidecar_manifest(args.out), sub, {}, outputs);
}

struct ScatterArgs {
    PanelArgs panel;
    std::string boundary;
    EntropyArgs entropy;
    std::string out;
};

void run_scatter(const CLI::App& sub, const ScatterArgs& args, std::ostream& out, std::ostream& err) {
    const SamplePanel panel = load_panel(args.panel, err);
    std::vector<std::pair<std::string, SamplePanel>> buckets;
    if (args.boundary.empty()) {
        buckets.emplace_back("all", panel);
    } else {
        BucketSplit split = split_buckets(panel, args.boundary);
        buckets.emplace_back("in", std::move(split.in_sample));
        buckets.emplace_back("out", std::move(split.out_sample));
    }
    const fs::path dir = args.out;
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    for (const auto& [label, bucket] : buckets) {
        const ScatterResult result = scatter_moment_entropy(bucket, label, args.entropy.config());
        for (const auto& id : result.skipped)
            err << "tailica: note: skipped constant column " << id << " (" << label << ")\n";
        const std::string name = "scatter_" + label + ".csv";
        write_file(dir / name, [&](std::ostream& o) {
            o << "symbol,root_moment_10,entropy\n";
            for (const auto& r : result.records)
                o << r.column_id << ',' << io::format_double(r.root_moment_10) << ',' << io::format_double(r.entropy)
                  << '\n';
        });
        outputs.push_back(name);
        out << label << ": " << result.records.size() << " symbols";
        if (result.records.size() >= 2) {
            std::vector<double> log_moment, entropy;
            for (const auto& r : result.records) {
                log_moment.push_back(std::log(r.root_moment_10));
                entropy.push_back(r.entropy);
            }
            out << ", corr(ln M_10^(1/10), entropy)=" << io::format_double(pearson_correlation(log_moment, entropy));
        }
        out << '\n';
    }
    write_manifest(dir / "manifest.json", sub, {}, outputs);
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tail-focused independent component analysis of return panels.", "tailica"};
    app.config_formatter(std::make_shared<ManifestConfig>(command_name(args)));
    app.set_config("--config", "", "key=value file, or the manifest.json of an earlier run; flags override it");
    app.option_defaults()->always_capture_default();
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.fallthrough();
    app.require_subcommand(1, 1);
    const std::string footer = "Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.\n"
                               "TAILICA_THREADS caps worker threads (0 or unset: one per core).";
    app.footer(footer);

    std::map<const CLI::App*, std::function<void()>> actions;
    auto add_command = [&](const std::string& name, const std::string& description) {
        CLI::App* sub = app.add_subcommand(name, description);
        sub->footer("  --config FILE               key=value file, or the manifest.json of an earlier run of this\n"
                    "                              command; any flag given on the command line overrides it\n\n" +
                    footer);
        return sub;
    };

    IngestArgs ingest;
    {
        CLI::App* sub = add_command("ingest", "Read a long or wide return CSV and write the dense wide panel");
        add_panel_options(*sub, ingest.panel);
        sub->add_option("--out", ingest.out, "Output wide CSV (manifest at <out>.manifest.json)")->required();
        actions[sub] = [&, sub] { run_ingest(*sub, ingest, out, err); };
    }

    SynthArgs synth;
    {
        CLI::App* sub = add_command("synth", "Generate a one-factor Student-t market with a crash regime");
        auto& s = synth.spec;
        sub->add_option("--assets", s.n_assets, "Number of assets")->check(CLI::PositiveNumber);
        sub->add_option("--samples", s.m_samples, "Number of daily samples")->check(CLI::Range(2, 100000000));
        sub->add_option("--nu-min", s.nu_min, "Smallest idiosyncratic Student-t tail exponent (> 2)");
        sub->add_option("--nu-max", s.nu_max, "Largest idiosyncratic Student-t tail exponent");
        sub->add_option("--factor-nu", s.factor_nu, "Tail exponent of the common factor");
        sub->add_flag("--gaussian", s.gaussian, "Normal draws everywhere and no crashes");
        sub->add_option("--loading-min", s.loading_min, "Smallest factor loading");
        sub->add_option("--loading-max", s.loading_max, "Largest factor loading");
        sub->add_option("--vol-min", s.vol_min, "Smallest daily volatility (percentage points)");
        sub->add_option("--vol-max", s.vol_max, "Largest daily volatility (percentage points)");
        sub->add_option("--crash-prob", s.crash_probability, "Daily crash probability inside the crash regime");
        sub->add_option("--crash-magnitude", s.crash_magnitude, "Crash size in factor standard deviations");
        sub->add_option("--crash-start", s.crash_start_fraction, "Fraction of the sample before the crash regime");
        sub->add_option("--start-date", s.start_date, "First date (weekdays follow)")->check(kIsoDate);
        sub->add_option("--seed", s.seed, "Random seed");
        sub->add_option("--out", synth.out, "Output wide CSV (manifest at <out>.manifest.json)")->required();
        actions[sub] = [&, sub] { run_synth(*sub, synth, out); };
    }

    FitArgs fit;
    {
        CLI::App* sub = add_command("fit", "Whiten and fit ICA on the in-sample bucket, report both buckets");
        add_panel_options(*sub, fit.panel);
        sub->add_option("--boundary", fit.boundary,
                        "First out-of-sample date; empty means the middle row's date")
            ->check(kIsoDate);
        sub->add_option("--d", fit.d, "Number of whitened directions")->check(CLI::PositiveNumber);
        sub->add_option("--k", fit.k, "Contrast orders (one fit each)")->check(CLI::PositiveNumber);
        sub->add_option("--seed", fit.seed, "Seed of the random orthogonal start");
        sub->add_option("--tol", fit.tol, "Convergence tolerance on 1 - min |<w_new, w_old>|")
            ->check(CLI::PositiveNumber);
        sub->add_option("--max-iter", fit.max_iter, "Fixed-point iteration cap")->check(CLI::PositiveNumber);
        sub->add_flag("--standardize", fit.standardize, "Scale assets to unit variance before PCA");
        sub->add_option("--eig-floor", fit.eig_floor, "Drop directions with eigenvalue below this times the largest")
            ->check(CLI::PositiveNumber);
        add_entropy_options(*sub, fit.entropy);
        sub->add_option("--out", fit.out, "Output directory")->required();
        actions[sub] = [&, sub] { run_fit(*sub, fit, out, err); };
    }

    EvalArgs eval;
    {
        CLI::App* sub = add_command("eval", "Report one bucket through the transforms of an earlier fit");
        add_panel_options(*sub, eval.panel);
        sub->add_option("--run", eval.run, "Directory written by `fit`")->required()->check(CLI::ExistingDirectory);
        sub->add_option("--k", eval.k, "Orders to evaluate; empty means every W_k<k>.csv in the run")
            ->check(CLI::PositiveNumber);
        sub->add_option("--boundary", eval.boundary, "First out-of-sample date; empty reuses the fit's boundary")
            ->check(kIsoDate);
        sub->add_option("--bucket", eval.bucket, "Rows to report")->check(CLI::IsMember({"in", "out", "all"}));
        add_entropy_options(*sub, eval.entropy);
        sub->add_option("--out", eval.out, "Output directory")->required();
        actions[sub] = [&, sub] { run_eval(*sub, eval, out, err); };
    }

    TransformArgs xform;
    {
        CLI::App* sub = add_command("transform", "Apply a saved whitening (and optionally W) to a panel");
        add_panel_options(*sub, xform.panel);
        sub->add_option("--whitening", xform.whitening, "whitening.csv from `fit`")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--unmixing", xform.unmixing, "W_k<k>.csv from `fit`; empty writes the whitened panel")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", xform.out, "Output wide CSV (manifest at <out>.manifest.json)")->required();
        actions[sub] = [&, sub] { run_transform(*sub, xform, out, err); };
    }

    EntropyCmdArgs entropy;
    {
        CLI::App* sub = add_command("entropy", "Differential entropy of every column");
        add_panel_options(*sub, entropy.panel);
        add_entropy_options(*sub, entropy.entropy);
        sub->add_option("--out", entropy.out, "Output CSV (manifest at <out>.manifest.json)")->required();
        actions[sub] = [&, sub] { run_entropy(*sub, entropy, out, err); };
    }

    TailcovArgs tailcov;
    {
        CLI::App* sub = add_command("tailcov", "Tail covariance matrix of the centered columns");
        add_panel_options(*sub, tailcov.panel);
        sub->add_option("--k", tailcov.k, "Order k of E[s_i s_j^(2k-1)]")->check(CLI::PositiveNumber);
        sub->add_flag("--limit", tailcov.limit, "Write the k -> infinity max-overlap matrix instead");
        sub->add_option("--bootstrap", tailcov.bootstrap, "Bootstrap resamples for standard errors; 0 skips")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", tailcov.seed, "Bootstrap seed");
        sub->add_option("--se-out", tailcov.se_out, "Output CSV for the bootstrap standard errors");
        sub->add_option("--out", tailcov.out, "Output CSV (manifest at <out>.manifest.json)")->required();
        actions[sub] = [&, sub] { run_tailcov(*sub, tailcov, out, err); };
    }

    ScatterArgs scatter;
    {
        CLI::App* sub = add_command("scatter", "Root moment M_10^(1/10) against entropy for every column");
        add_panel_options(*sub, scatter.panel);
        sub->add_option("--boundary", scatter.boundary, "Split into in/out buckets at this date; empty keeps one")
            ->check(kIsoDate);
        add_entropy_options(*sub, scatter.entropy);
        sub->add_option("--out", scatter.out, "Output directory")->required();
        actions[sub] = [&, sub] { run_scatter(*sub, scatter, out, err); };
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return exit_ok;
        }
        err << "tailica: " << one_line(e.what()) << '\n';
        return exit_usage;
    }

    try {
        for (const CLI::App* sub : app.get_subcommands()) actions.at(sub)();
        return exit_ok;
    } catch (const NumericalError& e) {
        err << "tailica: numerical failure: " << one_line(e.what()) << '\n';
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        err << "tailica: invalid parameter: " << one_line(e.what()) << '\n';
        return exit_usage;
    } catch (const DataError& e) {
        err << "tailica: data error: " << one_line(e.what()) << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        err << "tailica: error: " << one_line(e.what()) << '\n';
        return exit_data;
    }
}

}  // namespace tailica
