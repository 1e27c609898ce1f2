#include <seqsel/cli.hpp>

#include <seqsel/align.hpp>
#include <seqsel/cluster.hpp>
#include <seqsel/error.hpp>
#include <seqsel/forest.hpp>
#include <seqsel/parallel.hpp>
#include <seqsel/penreg.hpp>
#include <seqsel/report.hpp>
#include <seqsel/select.hpp>
#include <seqsel/seqdata.hpp>
#include <seqsel/synth.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace seqsel::cli {

namespace {

struct Common
{
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    int threads = 0;
    int folds = 10;
};

struct InputFormat
{
    std::string input;
    bool no_header = false;
    std::string id_col = "id";
    std::string outcome_col = "outcome";
    std::string delimiter = ",";
    std::string alphabet;
};

struct ClusterArgs
{
    std::vector<int> k_range{2, 100};
    int min_size = 13;
    double substitution = 2.0;
    double indel = 1.0;
    std::string costs;
    bool save_distances = false;
};

struct SelectArgs
{
    std::string method = "tlasso";
    std::string labels;
    std::string truth;
    double alpha = 0.5;
    int lambda_count = 100;
    double lambda_ratio = 1e-4;
    std::string threshold_grid = "auto";
    std::optional<double> threshold;
    int threshold_count = 40;
    int window = 5;
    int max_rounds = 100;
    std::string group_scope = "across-classes";
    int trees = 100;
    int min_depth = 1;
    int max_depth = 15;
    std::optional<int> mtry;
    std::string path_lambdas;
    std::string path_mode = "active";
    double tolerance = 1e-7;
    int max_iterations = 10000;
};

struct SynthArgs
{
    std::string spec;
    std::optional<int> n;
    std::optional<int> p;
    std::optional<double> persistence;
};

struct ReportArgs
{
    std::vector<std::string> inputs;
};

// Files written by a run; removed again if the run fails.
class Outputs
{
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void open()
    {
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
            created_ = true;
        } else if (!fs::is_directory(dir_)) {
            throw ValidationError("output path is not a directory: " + dir_.string());
        }
    }

    fs::path claim(const std::string& name)
    {
        fs::path p = dir_ / name;
        written_.push_back(p);
        return p;
    }

    void write(const std::string& name, const std::string& text)
    {
        const fs::path p = claim(name);
        std::ofstream out(p, std::ios::binary);
        out << text;
        if (!out) {
            throw Error("cannot write " + p.string());
        }
    }

    void rollback() noexcept
    {
        std::error_code ec;
        for (const auto& p : written_) {
            fs::remove(p, ec);
        }
        if (created_ && fs::is_empty(dir_, ec)) {
            fs::remove(dir_, ec);
        }
    }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool created_ = false;
};

void add_common(CLI::App& app, Common& c)
{
    app.add_option("--output-dir,-o", c.output_dir, "directory for output files")->capture_default_str();
    app.add_option("--seed", c.seed, "master random seed")->capture_default_str();
    app.add_option("--threads", c.threads, "worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--folds", c.folds, "cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
}

void add_format(CLI::App& app, InputFormat& f)
{
    app.add_option("--input,-i", f.input, "sequence table (CSV)")->required()->check(CLI::ExistingFile);
    app.add_flag("--no-header", f.no_header, "table has no header row");
    app.add_option("--id-col", f.id_col, "id column name (or 1-based index without header)");
    app.add_option("--outcome-col", f.outcome_col, "outcome column name (or 1-based index)");
    app.add_option("--delimiter", f.delimiter, "field delimiter, or 'tab'");
    app.add_option("--alphabet", f.alphabet, "file listing the state labels, one per line")->check(CLI::ExistingFile);
}

SequenceDataset load_input(const InputFormat& f)
{
    TableFormat fmt;
    fmt.header = !f.no_header;
    if (f.delimiter == "tab" || f.delimiter == "\\t") {
        fmt.delimiter = '\t';
    } else if (f.delimiter.size() == 1) {
        fmt.delimiter = f.delimiter[0];
    } else {
        throw ValidationError("delimiter must be a single character or 'tab'");
    }
    fmt.id_column = f.id_col;
    fmt.outcome_column = f.outcome_col;
    if (!f.alphabet.empty()) {
        fmt.alphabet = load_alphabet(f.alphabet);
    }
    return load_sequences(f.input, fmt);
}

ojson format_json(const InputFormat& f)
{
    return {{"input", f.input},
            {"header", !f.no_header},
            {"id_col", f.id_col},
            {"outcome_col", f.outcome_col},
            {"delimiter", f.delimiter},
            {"alphabet", f.alphabet}};
}

ojson common_json(const Common& c)
{
    return {{"output_dir", c.output_dir}, {"seed", c.seed}, {"threads", c.threads}, {"folds", c.folds}};
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) {
                ++used;
            }
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ValidationError(what + ": cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) {
        throw ValidationError(what + " is empty");
    }
    return out;
}

CostScheme load_costs(const ClusterArgs& a, int q)
{
    if (a.costs.empty()) {
        return CostScheme::constant(q, a.substitution, a.indel);
    }
    std::ifstream in(a.costs);
    if (!in) {
        throw FormatError("cannot open cost matrix " + a.costs);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        rows.push_back(parse_number_list(line, "cost matrix row"));
    }
    if (static_cast<int>(rows.size()) != q) {
        throw ValidationError("cost matrix must have " + std::to_string(q) + " rows, one per state");
    }
    Eigen::MatrixXd m(q, q);
    for (int r = 0; r < q; ++r) {
        if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != q) {
            throw ValidationError("cost matrix row " + std::to_string(r + 1) + " must have " + std::to_string(q) +
                                  " entries");
        }
        for (int c = 0; c < q; ++c) {
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    return CostScheme(m, a.indel);
}

void cmd_cluster(const Common& c, const InputFormat& f, const ClusterArgs& a, Outputs& out, std::ostream& log)
{
    if (a.k_range.size() != 2) {
        throw ValidationError("--k-range takes two values");
    }
    if (a.min_size < 1) {
        throw ValidationError("--min-size must be at least 1");
    }
    const SequenceDataset ds = load_input(f);
    const CostScheme costs = load_costs(a, ds.q());
    if (ds.n() < 3) {
        throw ValidationError("clustering needs at least 3 sequences");
    }
    const int k_min = a.k_range[0];
    const int k_max = std::min(a.k_range[1], ds.n() - 1);
    if (k_min < 2 || k_min > k_max) {
        throw ValidationError("--k-range must satisfy 2 <= min <= max < n (n = " + std::to_string(ds.n()) + ")");
    }

    const DistanceMatrix d = pairwise_distances(ds, costs);
    const Dendrogram dend = average_linkage(d);
    const ClusterCountSelection sel = select_num_clusters(dend, d, k_min, k_max);
    const ClusterLabels merged = merge_small(sel.labels, a.min_size);

    out.open();
    write_labels_csv(out.claim("labels.csv"), ds.ids(), merged);
    write_dendrogram_csv(out.claim("dendrogram.csv"), dend);
    std::ostringstream dunn;
    dunn << "k,dunn\n";
    for (std::size_t i = 0; i < sel.scores.size(); ++i) {
        dunn << sel.k_min + static_cast<int>(i) << ',' << format_number(sel.scores[i]) << '\n';
    }
    out.write("dunn.csv", dunn.str());
    if (a.save_distances) {
        d.write_binary(out.claim("distances.omd"));
    }

    ojson summary;
    summary["schema"] = kReportSchema;
    summary["n"] = ds.n();
    summary["k_selected"] = sel.k;
    summary["dunn"] = std::isfinite(sel.scores[static_cast<std::size_t>(sel.k - sel.k_min)])
                          ? ojson(sel.scores[static_cast<std::size_t>(sel.k - sel.k_min)])
                          : ojson(nullptr);
    summary["num_clusters"] = merged.num_clusters;
    summary["noise_cluster"] = merged.noise_cluster ? ojson(*merged.noise_cluster + 1) : ojson(nullptr);
    summary["sizes"] = merged.sizes();
    out.write("clusters.json", summary.dump(2) + "\n");
    log << "selected k = " << sel.k << ", " << merged.num_clusters << " clusters after merging\n";
}

GroundTruth load_truth(const std::string& path, const SequenceDataset& ds)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open truth file " + path);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": not valid JSON (" + e.what() + ")");
    }
    GroundTruth truth;
    try {
        if (j.contains("informative_names")) {
            for (const auto& name : j["informative_names"]) {
                const auto& names = ds.position_names();
                const auto it = std::find(names.begin(), names.end(), name.get<std::string>());
                if (it == names.end()) {
                    throw ValidationError(path + ": position '" + name.get<std::string>() + "' not in the dataset");
                }
                truth.informative.push_back(static_cast<int>(it - names.begin()));
            }
        } else {
            truth.informative = j.at("informative").get<std::vector<int>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": malformed truth file (" + e.what() + ")");
    }
    std::sort(truth.informative.begin(), truth.informative.end());
    return truth;
}

void cmd_select(const Common& c, const InputFormat& f, const SelectArgs& a, Outputs& out, std::ostream& log)
{
    static const std::vector<std::string> methods{"lasso", "tlasso", "repeated", "group", "sgl", "forest"};
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
        throw ValidationError("unknown method '" + a.method + "'");
    }
    if (a.group_scope != "across-classes" && a.group_scope != "per-class") {
        throw ValidationError("--group-scope must be across-classes or per-class");
    }
    if (a.path_mode != "active" && a.path_mode != "threshold") {
        throw ValidationError("--path-mode must be active or threshold");
    }
    if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) {
        throw ValidationError("--alpha must lie in [0, 1]");
    }
    std::optional<std::vector<double>> path_lambdas;
    if (!a.path_lambdas.empty()) {
        path_lambdas = parse_number_list(a.path_lambdas, "--path-lambdas");
    }
    std::optional<std::vector<double>> grid;
    if (a.threshold_grid != "auto") {
        grid = parse_number_list(a.threshold_grid, "--threshold-grid");
    }

    SequenceDataset ds = load_input(f);
    if (!a.labels.empty()) {
        ds = ds.with_outcome(load_outcome_for(ds, a.labels));
    }
    if (!ds.outcome()) {
        throw ValidationError("dataset has no outcome column; run `seqsel cluster` first and pass its labels.csv "
                              "with --labels");
    }
    std::optional<GroundTruth> truth;
    if (!a.truth.empty()) {
        truth = load_truth(a.truth, ds);
    }

    const DesignMatrix X = encode_one_hot(ds);
    const auto& y = ds.outcome()->classes;
    const int M = ds.outcome()->num_classes();

    SelectionSettings settings;
    settings.lambda_count = a.lambda_count;
    settings.lambda_ratio = a.lambda_ratio;
    settings.cv.folds = c.folds;
    settings.cv.seed = c.seed;
    settings.cv.solver.tolerance = a.tolerance;
    settings.cv.solver.max_iterations = a.max_iterations;
    const GroupScope scope = a.group_scope == "per-class" ? GroupScope::per_class : GroupScope::across_classes;

    SelectionReport report;
    std::optional<CVResult> step1;
    std::optional<ImportanceVector> importance;
    if (a.method == "lasso") {
        step1 = lasso_step(X, y, M, settings);
        report = lasso_selection(*step1, X, y, M, settings);
    } else if (a.method == "tlasso") {
        step1 = lasso_step(X, y, M, settings);
        if (a.threshold) {
            report = thresholded_lasso(*step1, X, y, M, *a.threshold, settings);
        } else {
            auto g = grid ? *grid : auto_threshold_grid(step1->refit.coef, a.threshold_count);
            std::sort(g.begin(), g.end());
            report = sweep_report(threshold_sweep(*step1, X, y, M, std::move(g), settings));
        }
    } else if (a.method == "repeated") {
        report = repeated_lasso(X, y, M, a.window, a.max_rounds, settings);
    } else if (a.method == "group") {
        report = penalized_selection(X, y, M, PenaltySpec::group(X, scope), settings);
    } else if (a.method == "sgl") {
        report = penalized_selection(X, y, M, PenaltySpec::sparse_group(X, a.alpha, scope), settings);
    } else {
        ForestSelectionSettings fs;
        fs.forest.n_trees = a.trees;
        fs.forest.max_depth = a.max_depth;
        fs.forest.seed = c.seed;
        fs.forest.mtry = a.mtry;
        fs.min_depth = a.min_depth;
        fs.folds = c.folds;
        fs.threshold_count = a.threshold_count;
        if (grid) {
            fs.thresholds = *grid;
            std::sort(fs.thresholds.begin(), fs.thresholds.end());
        }
        importance.emplace();
        report = forest_selection(X, y, M, fs, &*importance);
    }

    std::optional<std::vector<PathRow>> path;
    if (path_lambdas) {
        path = lambda_path_table(X, y, M, *path_lambdas, settings,
                                 a.path_mode == "active" ? PathMode::active_set : PathMode::threshold_fit);
    }

    ojson j = report_to_json(report, ds);
    if (path) {
        j["metadata"]["path_semantics"] = a.path_mode == "active"
                                              ? "positions active (nonzero) in the fit at each lambda"
                                              : "positions of the CV-optimal fit with |beta| >= lambda";
    }
    if (truth) {
        const auto score = score_selection(report.selected, *truth);
        j["truth"] = {{"recall", score.recall},
                      {"precision", score.precision ? ojson(*score.precision) : ojson(nullptr)},
                      {"overselection", score.overselection}};
    }

    out.open();
    out.write("report.json", j.dump(2) + "\n");
    out.write("curve.csv", format_curve_csv(report));
    if (step1) {
        out.write("cv.csv", format_cv_csv(*step1));
        out.write("coefficients.csv", format_coefficients_csv(step1->refit.coef, X, ds.outcome()->labels,
                                                              ds.position_names(), ds.alphabet()));
    }
    if (importance) {
        out.write("importance.csv", format_importance_csv(*importance, X, ds));
    }
    if (path) {
        out.write("path.csv", format_path_csv(*path));
    }
    log << report.method << ": " << report.n_positions << " positions, CV misclassification "
        << format_number(report.cv_misclassification) << '\n';
}

void cmd_synth(const Common& c, bool seed_given, const SynthArgs& a, Outputs& out, std::ostream& log)
{
    SynthSpec spec = SynthSpec::benchmark();
    if (!a.spec.empty()) {
        std::ifstream in(a.spec);
        if (!in) {
            throw FormatError("cannot open spec file " + a.spec);
        }
        std::ostringstream text;
        text << in.rdbuf();
        spec = SynthSpec::from_json(text.str());
    }
    if (a.spec.empty() || seed_given) {
        spec.seed = c.seed;
    }
    if (a.n) {
        spec.n = *a.n;
    }
    if (a.p) {
        if (*a.p != spec.p) {
            // keep only the informative positions that still fit
            std::vector<int> keep;
            std::vector<std::vector<std::vector<double>>> theta(spec.theta_informative.size());
            for (std::size_t idx = 0; idx < spec.informative.size(); ++idx) {
                if (spec.informative[idx] < *a.p) {
                    keep.push_back(spec.informative[idx]);
                    for (std::size_t m = 0; m < theta.size(); ++m) {
                        theta[m].push_back(spec.theta_informative[m][idx]);
                    }
                }
            }
            spec.informative = keep;
            spec.theta_informative = theta;
        }
        spec.p = *a.p;
    }
    if (a.persistence) {
        spec.markov_persistence = *a.persistence;
    }
    spec.validate();
    const auto [ds, truth] = generate(spec);

    out.open();
    out.write("sequences.csv", format_sequences(ds));
    out.write("truth.json", truth.to_json(ds));
    out.write("spec.json", spec.to_json());
    log << "generated " << ds.n() << " sequences of length " << ds.p() << '\n';
}

void cmd_report(const ReportArgs& a, Outputs& out, std::ostream& log)
{
    if (a.inputs.empty()) {
        throw ValidationError("report needs at least one input report");
    }
    std::vector<ReportRow> rows;
    for (const auto& path : a.inputs) {
        rows.push_back(load_report(path));
    }
    out.open();
    out.write("comparison.csv", format_report_table(rows));
    log << "merged " << rows.size() << " reports\n";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Key-position selection for categorical sequences", "seqsel"};
    app.require_subcommand(1);

    Common common;
    InputFormat fmt;
    ClusterArgs cl;
    SelectArgs sel;
    SynthArgs syn;
    ReportArgs rep;

    auto* cluster = app.add_subcommand("cluster", "optimal matching + average linkage + Dunn index");
    add_common(*cluster, common);
    add_format(*cluster, fmt);
    cluster->add_option("--k-range", cl.k_range, "inclusive range of cluster counts")->expected(2)->capture_default_str();
    cluster->add_option("--min-size", cl.min_size, "clusters smaller than this are pooled")->capture_default_str();
    cluster->add_option("--substitution", cl.substitution, "substitution cost between distinct states")
        ->capture_default_str();
    cluster->add_option("--indel", cl.indel, "insertion/deletion cost")->capture_default_str();
    cluster->add_option("--costs", cl.costs, "q x q substitution cost matrix (CSV)")->check(CLI::ExistingFile);
    cluster->add_flag("--save-distances", cl.save_distances, "also write the binary distance matrix");

    auto* select = app.add_subcommand("select", "select key positions");
    add_common(*select, common);
    add_format(*select, fmt);
    select->add_option("--method", sel.method, "lasso|tlasso|repeated|group|sgl|forest")->capture_default_str();
    select->add_option("--labels", sel.labels, "id,label file from `seqsel cluster`")->check(CLI::ExistingFile);
    select->add_option("--truth", sel.truth, "ground-truth JSON from `seqsel synth`")->check(CLI::ExistingFile);
    select->add_option("--alpha", sel.alpha, "l1 share of the sparse-group penalty")->capture_default_str();
    select->add_option("--lambda-count", sel.lambda_count, "lambda grid size")->check(CLI::PositiveNumber);
    select->add_option("--lambda-ratio", sel.lambda_ratio, "smallest lambda / lambda_max")
        ->check(CLI::Range(1e-12, 1.0));
    select->add_option("--threshold-grid", sel.threshold_grid, "'auto' or comma-separated thresholds");
    select->add_option("--threshold", sel.threshold, "single hard threshold (tlasso)")
        ->check(CLI::NonNegativeNumber);
    select->add_option("--threshold-count", sel.threshold_count, "size of the automatic threshold grid")
        ->check(CLI::PositiveNumber);
    select->add_option("--window", sel.window, "repeated LASSO stability window")->check(CLI::PositiveNumber);
    select->add_option("--max-rounds", sel.max_rounds, "repeated LASSO round cap")->check(CLI::PositiveNumber);
    select->add_option("--group-scope", sel.group_scope, "across-classes|per-class");
    select->add_option("--trees", sel.trees, "trees per forest")->check(CLI::PositiveNumber);
    select->add_option("--min-depth", sel.min_depth, "smallest forest depth tried")->check(CLI::PositiveNumber);
    select->add_option("--max-depth", sel.max_depth, "largest forest depth tried")->check(CLI::PositiveNumber);
    select->add_option("--mtry", sel.mtry, "candidate columns per split")->check(CLI::PositiveNumber);
    select->add_option("--path-lambdas", sel.path_lambdas, "comma-separated lambdas for path.csv");
    select->add_option("--path-mode", sel.path_mode, "active|threshold");
    select->add_option("--tolerance", sel.tolerance, "solver relative objective tolerance")
        ->check(CLI::PositiveNumber);
    select->add_option("--max-iterations", sel.max_iterations, "solver iteration cap")->check(CLI::PositiveNumber);

    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
    add_common(*synth, common);
    synth->add_option("--spec", syn.spec, "spec JSON (defaults to the built-in benchmark)")
        ->check(CLI::ExistingFile);
    synth->add_option("--n", syn.n, "number of sequences")->check(CLI::PositiveNumber);
    synth->add_option("--p", syn.p, "sequence length")->check(CLI::PositiveNumber);
    synth->add_option("--persistence", syn.persistence, "probability of copying the previous state");

    auto* report = app.add_subcommand("report", "merge selection reports into one table");
    add_common(*report, common);
    report->add_option("--input,-i", rep.inputs, "report.json files")->required()->check(CLI::ExistingFile);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    set_max_threads(common.threads);
    CLI::App* used = app.get_subcommands().front();
    Outputs outputs(common.output_dir);
    try {
        ojson config;
        config["schema"] = kReportSchema;
        config["subcommand"] = used->get_name();
        config["common"] = common_json(common);
        if (used == cluster) {
            config["input"] = format_json(fmt);
            config["k_range"] = cl.k_range;
            config["min_size"] = cl.min_size;
            config["substitution"] = cl.substitution;
            config["indel"] = cl.indel;
            config["costs"] = cl.costs;
            config["save_distances"] = cl.save_distances;
            cmd_cluster(common, fmt, cl, outputs, out);
        } else if (used == select) {
            config["input"] = format_json(fmt);
            config["method"] = sel.method;
            config["labels"] = sel.labels;
            config["truth"] = sel.truth;
            config["alpha"] = sel.alpha;
            config["lambda_count"] = sel.lambda_count;
            config["lambda_ratio"] = sel.lambda_ratio;
            config["threshold_grid"] = sel.threshold_grid;
            config["threshold"] = sel.threshold ? ojson(*sel.threshold) : ojson(nullptr);
            config["threshold_count"] = sel.threshold_count;
            config["window"] = sel.window;
            config["max_rounds"] = sel.max_rounds;
            config["group_scope"] = sel.group_scope;
            config["trees"] = sel.trees;
            config["min_depth"] = sel.min_depth;
            config["max_depth"] = sel.max_depth;
            config["mtry"] = sel.mtry ? ojson(*sel.mtry) : ojson(nullptr);
            config["path_lambdas"] = sel.path_lambdas;
            config["path_mode"] = sel.path_mode;
            config["tolerance"] = sel.tolerance;
            config["max_iterations"] = sel.max_iterations;
            cmd_select(common, fmt, sel, outputs, out);
        } else if (used == synth) {
            const bool seed_given = synth->count("--seed") > 0;
            config["spec"] = syn.spec;
            config["n"] = syn.n ? ojson(*syn.n) : ojson(nullptr);
            config["p"] = syn.p ? ojson(*syn.p) : ojson(nullptr);
            config["persistence"] = syn.persistence ? ojson(*syn.persistence) : ojson(nullptr);
            cmd_synth(common, seed_given, syn, outputs, out);
        } else {
            config["inputs"] = rep.inputs;
            cmd_report(rep, outputs, out);
        }
        outputs.write("config.json", config.dump(2) + "\n");
    } catch (const std::exception& e) {
        outputs.rollback();
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, std::cout, std::cerr);
}

} // namespace seqsel::cli
