// Command-line front end: synthetic data generation, ensemble training,
// prediction, cross-validated evaluation, and surface/error-field exports.
//
// Every command that uses randomness requires an explicit --seed; reruns with
// identical inputs and seeds reproduce outputs byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "geoloc/dataset.hpp"
#include "geoloc/ensemble.hpp"
#include "geoloc/eval.hpp"
#include "geoloc/geojson.hpp"
#include "geoloc/synth.hpp"

using namespace geoloc;

namespace {

struct ConfigOverlay {
    // JSON config file values fill in options the command line left unset.
    std::vector<std::pair<CLI::Option*, std::function<void(const nlohmann::json&)>>> bindings;
    std::string path;

    template <typename T>
    void bind(CLI::Option* opt, const std::string& key, T& target) {
        bindings.emplace_back(opt, [key, &target](const nlohmann::json& j) {
            if (j.contains(key)) target = j.at(key).get<T>();
        });
    }

    void apply() const {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        nlohmann::json j;
        in >> j;
        for (const auto& [opt, fn] : bindings)
            if (opt->count() == 0) fn(j);
    }
};

std::vector<int> parse_hidden(const std::string& csv) {
    std::vector<int> out;
    std::stringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

struct ModelOpts {
    std::string scheme = "mixed";
    double fraction = -1.0;  // <0: scheme default
    std::string classifier = "deep_net";
    int neighbors = 25;
    int trees = 200;
    std::string hidden;  // comma separated; empty = classifier default
    double dropout = -1.0;
    int epochs = -1;
    int batch_size = -1;
    double learning_rate = -1.0;
    unsigned members = 50;
    double grid_res = 0.25;
    unsigned mc_points = 100000;
    bool planar = false;
    bool no_normalize = false;

    void add_to(CLI::App* app, ConfigOverlay& overlay) {
        overlay.bind(app->add_option("--scheme", scheme, "Partition scheme: coarse|fine|mixed"), "scheme", scheme);
        overlay.bind(app->add_option("--fraction", fraction, "Seed fraction override for coarse/fine"), "fraction",
                     fraction);
        overlay.bind(
            app->add_option("--classifier", classifier, "Classifier: knn|forest|shallow_net|deep_net"),
            "classifier", classifier);
        overlay.bind(app->add_option("--neighbors", neighbors, "KNN neighbor count"), "neighbors", neighbors);
        overlay.bind(app->add_option("--trees", trees, "Forest tree count"), "trees", trees);
        overlay.bind(app->add_option("--hidden", hidden, "Net hidden sizes, e.g. 256,128,128"), "hidden", hidden);
        overlay.bind(app->add_option("--dropout", dropout, "Deep-net dropout rate"), "dropout", dropout);
        overlay.bind(app->add_option("--epochs", epochs, "Training epochs"), "epochs", epochs);
        overlay.bind(app->add_option("--batch-size", batch_size, "Minibatch size"), "batch_size", batch_size);
        overlay.bind(app->add_option("--learning-rate", learning_rate, "Adam learning rate"), "learning_rate",
                     learning_rate);
        overlay.bind(app->add_option("--members,-J", members, "Partition/classifier pairs"), "members", members);
        overlay.bind(app->add_option("--grid-res", grid_res, "Grid resolution, degrees"), "grid_res", grid_res);
        overlay.bind(app->add_option("--mc-points", mc_points, "Monte Carlo points per partition"), "mc_points",
                     mc_points);
        app->add_flag("--planar", planar, "Planar lon/lat metric for tile assignment");
        app->add_flag("--no-normalize", no_normalize, "Skip the 1/J factor on the aggregate surface");
    }

    EnsembleConfig ensemble_config(std::uint64_t seed) const {
        EnsembleConfig c;
        c.scheme = PartitionScheme::from_name(scheme);
        if (fraction > 0) {
            if (c.scheme.mode == PartitionScheme::Mode::mixed)
                throw CLI::ValidationError("--fraction applies to coarse/fine schemes only");
            c.scheme.fraction = fraction;
        }
        ClassifierSpec spec;
        const auto kind = ClassifierSpec::kind_from_name(classifier);
        switch (kind) {
            case ClassifierSpec::Kind::knn: spec = ClassifierSpec::make_knn(neighbors); break;
            case ClassifierSpec::Kind::forest: spec = ClassifierSpec::make_forest(trees); break;
            case ClassifierSpec::Kind::shallow_net: spec = ClassifierSpec::make_shallow_net(); break;
            case ClassifierSpec::Kind::deep_net: spec = ClassifierSpec::make_deep_net(); break;
        }
        if (!hidden.empty()) spec.hidden = parse_hidden(hidden);
        if (dropout >= 0) spec.dropout = dropout;
        if (epochs >= 0) spec.train.epochs = epochs;
        if (batch_size > 0) spec.train.batch_size = batch_size;
        if (learning_rate > 0) spec.train.learning_rate = learning_rate;
        spec.validate();
        c.classifier = spec;
        c.members = members;
        c.grid_resolution_deg = grid_res;
        c.mc_points = mc_points;
        c.metric = planar ? SeedMetric::planar : SeedMetric::great_circle;
        c.normalize_by_members = !no_normalize;
        c.seed = seed;
        return c;
    }
};

struct AreaOpts {
    std::vector<std::string> specs;  // LEVEL=TABLE_CSV=POLYGONS_GEOJSON
    std::string weight_level;

    void add_to(CLI::App* app) {
        app->add_option("--areas", specs, "Area level as LEVEL=TABLE_CSV=POLYGONS_GEOJSON (repeatable)");
        app->add_option("--weight-level", weight_level, "Area level used for population weighting");
    }

    std::map<std::string, AreaTable> load() const {
        std::map<std::string, AreaTable> out;
        for (const std::string& spec : specs) {
            std::vector<std::string> parts;
            std::stringstream in(spec);
            std::string tok;
            while (std::getline(in, tok, '=')) parts.push_back(tok);
            if (parts.size() != 3)
                throw std::runtime_error("--areas expects LEVEL=TABLE_CSV=POLYGONS_GEOJSON, got '" + spec + "'");
            AreaTable table = load_area_table(parts[1]);
            table.polygons = load_keyed_polygons(parts[2]);
            out.emplace(parts[0], std::move(table));
        }
        return out;
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

void write_surface_csv(const std::string& path, const Grid& grid, const std::vector<double>& surface) {
    std::ostringstream out;
    out.precision(17);
    out << "lat,lon,density_per_km2\n";
    for (std::size_t c = 0; c < grid.size(); ++c)
        out << grid.centers()[c].lat << ',' << grid.centers()[c].lon << ',' << surface[c] << "\n";
    write_text(path, out.str());
}

void write_surface_geojson(const std::string& path, const Grid& grid, const std::vector<double>& surface) {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t c = 0; c < grid.size(); ++c) {
        features.push_back({{"type", "Feature"},
                            {"geometry",
                             {{"type", "Point"},
                              {"coordinates", {grid.centers()[c].lon, grid.centers()[c].lat}}}},
                            {"properties", {{"density_per_km2", surface[c]}}}});
    }
    write_text(path, nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) + "\n");
}

void write_grid_csv(const std::string& path, const Grid& grid, const std::vector<double>& values) {
    std::ostringstream out;
    out.precision(17);
    out << "lat,lon,cell_area_km2,value\n";
    for (std::size_t c = 0; c < grid.size(); ++c)
        out << grid.centers()[c].lat << ',' << grid.centers()[c].lon << ',' << grid.cell_areas_km2()[c]
            << ',' << values[c] << "\n";
    write_text(path, out.str());
}

void write_error_field_csv(const std::string& path, const ErrorField& field) {
    std::ostringstream out;
    out.precision(17);
    out << "lat,lon,d_east_km,d_north_km,mean_error_km\n";
    for (std::size_t c = 0; c < field.centers.size(); ++c) {
        if (!field.valid[c]) continue;
        out << field.centers[c].lat << ',' << field.centers[c].lon << ',' << field.d_east_km[c] << ','
            << field.d_north_km[c] << ',' << field.mean_error_km[c] << "\n";
    }
    write_text(path, out.str());
}

void write_per_sample_csv(const std::string& path, const CvReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "id,fold,true_lat,true_lon,pred_lat,pred_lon,error_km,covered\n";
    for (const SampleResult& r : report.results)
        out << r.id << ',' << r.fold << ',' << r.truth.lat << ',' << r.truth.lon << ',' << r.predicted.lat
            << ',' << r.predicted.lon << ',' << r.error_km << ',' << (r.covered ? 1 : 0) << "\n";
    write_text(path, out.str());
}

std::vector<SampleResult> read_per_sample_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,fold", 0) != 0)
        throw std::runtime_error(path + ": not a per-sample results file");
    std::vector<SampleResult> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 8) throw std::runtime_error(path + ": malformed row '" + line + "'");
        SampleResult r;
        r.id = fields[0];
        r.fold = static_cast<std::uint32_t>(std::stoul(fields[1]));
        r.truth = {std::stod(fields[2]), std::stod(fields[3])};
        r.predicted = {std::stod(fields[4]), std::stod(fields[5])};
        r.error_km = std::stod(fields[6]);
        r.covered = fields[7] == "1";
        out.push_back(std::move(r));
    }
    return out;
}

// ---- subcommands ----

int cmd_gen(const std::string& domain_path, const std::string& config_path, const std::string& out_path,
            const std::string& fields_out, std::uint64_t seed, std::optional<unsigned> n_override,
            std::optional<unsigned> p_override) {
    const Domain domain = load_domain_geojson(domain_path);
    SyntheticConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config file: " + config_path);
        nlohmann::json j;
        in >> j;
        cfg = SyntheticConfig::from_json(j);
    }
    cfg.seed = seed;
    if (n_override) cfg.n = *n_override;
    if (p_override) cfg.p = *p_override;
    cfg.validate();

    const std::vector<TaxonField> fields = make_fields(cfg, domain);
    const Dataset ds = generate_with_fields(fields, cfg.n, domain, cfg.seed);
    save_samples(out_path, ds);
    if (!fields_out.empty()) {
        SyntheticConfig echo = cfg;
        echo.explicit_fields = fields;
        write_text(fields_out, echo.to_json().dump(1) + "\n");
    }
    std::cerr << "generated " << ds.size() << " samples, p=" << ds.p << " -> " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& domain_path, const ModelOpts& opts,
              const AreaOpts& area_opts, std::uint64_t seed, const std::string& out_path) {
    const Domain domain = load_domain_geojson(domain_path);
    Dataset ds = load_samples(data_path, &domain);
    if (!area_opts.weight_level.empty()) {
        const auto areas = area_opts.load();
        auto it = areas.find(area_opts.weight_level);
        if (it == areas.end())
            throw std::runtime_error("no --areas entry for weight level '" + area_opts.weight_level + "'");
        compute_weights(ds, it->second);
    }
    std::vector<MemberDiagnostics> diag;
    const EnsembleModel model = train_ensemble(ds, domain, opts.ensemble_config(seed), &diag);
    for (std::size_t j = 0; j < diag.size(); ++j) {
        std::cerr << "member " << j << ": seeds=" << diag[j].seed_count << " occupied=" << diag[j].occupied_tiles;
        if (diag[j].redraws) std::cerr << " redraws=" << diag[j].redraws;
        if (model.config.classifier.kind == ClassifierSpec::Kind::shallow_net ||
            model.config.classifier.kind == ClassifierSpec::Kind::deep_net)
            std::cerr << " final_loss=" << diag[j].final_loss;
        std::cerr << "\n";
    }
    save_model(model, out_path);
    std::cerr << "trained " << model.member_count() << " members on " << ds.size() << " samples -> "
              << out_path << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& queries_path, const std::string& out_path,
                double mass, const std::string& surface_prefix, const std::string& surface_format) {
    const EnsembleModel model = load_model(model_path);
    const Dataset queries = load_samples(queries_path);
    std::ostringstream out;
    out.precision(17);
    out << "id,pred_lat,pred_lon,region_mass,region_cell_count\n";
    std::vector<std::string> rows(queries.size());
    std::vector<std::vector<double>> surfaces(surface_prefix.empty() ? 0 : queries.size());
    parallel_for(queries.size(), [&](std::size_t i) {
        const Sample& q = queries.samples[i];
        if (!q.features.empty() && q.features.back() >= model.p)
            throw std::runtime_error("query '" + q.id + "': feature index " +
                                     std::to_string(q.features.back()) + " out of range for model (p=" +
                                     std::to_string(model.p) + ")");
        const std::vector<double> surface = density_grid(model, q.features);
        const GeoPoint pred = model.grid.centers()[argmax_cell(surface)];
        const PredictionRegion region = prediction_region(surface, model.grid, mass);
        std::ostringstream row;
        row.precision(17);
        row << q.id << ',' << pred.lat << ',' << pred.lon << ',' << region.achieved_mass << ','
            << region.cells.size();
        rows[i] = row.str();
        if (!surface_prefix.empty()) surfaces[i] = surface;
    });
    for (const std::string& row : rows) out << row << "\n";
    write_text(out_path, out.str());
    if (!surface_prefix.empty()) {
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const std::string base = surface_prefix + queries.samples[i].id;
            if (surface_format == "geojson")
                write_surface_geojson(base + ".geojson", model.grid, surfaces[i]);
            else
                write_surface_csv(base + ".csv", model.grid, surfaces[i]);
        }
    }
    std::cerr << "predicted " << queries.size() << " queries -> " << out_path << "\n";
    return 0;
}

int cmd_cv(const std::string& data_path, const std::string& domain_path, const ModelOpts& opts,
           const AreaOpts& area_opts, std::size_t folds, double mass, bool country_mode, std::uint64_t seed,
           const std::string& report_json, const std::string& report_csv, const std::string& per_sample_out,
           const std::string& oracle_fields_path, const std::string& error_field_out, double bandwidth_km) {
    const Domain domain = load_domain_geojson(domain_path);
    const Dataset ds = load_samples(data_path, &domain);
    const auto areas = area_opts.load();

    CvConfig config;
    config.folds = folds;
    config.ensemble = opts.ensemble_config(seed);
    config.region_mass = mass;
    config.seed = seed;
    config.country_mode = country_mode;
    config.weight_level = area_opts.weight_level;

    std::vector<TaxonField> oracle_fields;
    if (!oracle_fields_path.empty()) {
        std::ifstream in(oracle_fields_path);
        if (!in) throw std::runtime_error("cannot open oracle fields file: " + oracle_fields_path);
        nlohmann::json j;
        in >> j;
        oracle_fields = SyntheticConfig::from_json(j).explicit_fields;
        if (oracle_fields.empty())
            throw std::runtime_error(oracle_fields_path + " carries no explicit taxon fields");
    }

    const CvReport report = run_cv(ds, domain, config, areas,
                                   oracle_fields.empty() ? nullptr : &oracle_fields, &std::cerr);

    if (!report_json.empty()) write_text(report_json, report.to_json().dump(1) + "\n");
    if (!report_csv.empty()) write_text(report_csv, report.csv_header() + "\n" + report.csv_row() + "\n");
    if (!per_sample_out.empty()) write_per_sample_csv(per_sample_out, report);
    if (!error_field_out.empty()) {
        const Grid grid(domain, config.ensemble.grid_resolution_deg);
        write_error_field_csv(error_field_out, error_field(report.results, bandwidth_km, grid));
    }
    if (!report.country_mode)
        std::cerr << "cv done: median " << report.median_error_km() << " km, coverage "
                  << 100.0 * report.coverage() << "%\n";
    else
        std::cerr << "cv done (country mode)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forensic geolocation with random-Voronoi-partition classifier ensembles"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: hardware)");

    std::string cfg_gen_domain, cfg_gen_config, cfg_gen_out, cfg_gen_fields;
    std::uint64_t gen_seed = 0;
    unsigned gen_n = 0, gen_p = 0;
    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset with a known oracle");
    gen->add_option("--domain", cfg_gen_domain, "Domain GeoJSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--config", cfg_gen_config, "Synthetic config JSON")->check(CLI::ExistingFile);
    gen->add_option("--out", cfg_gen_out, "Output dataset CSV")->required();
    gen->add_option("--fields-out", cfg_gen_fields, "Write taxon fields JSON (oracle input)");
    gen->add_option("--seed", gen_seed, "Master RNG seed")->required();
    CLI::Option* gen_n_opt = gen->add_option("--n", gen_n, "Sample count override");
    CLI::Option* gen_p_opt = gen->add_option("--p", gen_p, "Feature count override");

    ConfigOverlay train_overlay;
    ModelOpts train_opts;
    AreaOpts train_areas;
    std::string train_data, train_domain, train_out;
    std::uint64_t train_seed = 0;
    CLI::App* train = app.add_subcommand("train", "Train an ensemble model");
    train->add_option("--config", train_overlay.path, "JSON config; flags override it")->check(CLI::ExistingFile);
    train->add_option("--data", train_data, "Training dataset CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--domain", train_domain, "Domain GeoJSON")->required()->check(CLI::ExistingFile);
    train->add_option("--out", train_out, "Output model file")->required();
    train->add_option("--seed", train_seed, "Master RNG seed")->required();
    train_opts.add_to(train, train_overlay);
    train_areas.add_to(train);

    std::string pred_model, pred_queries, pred_out, pred_surface_prefix, pred_surface_format = "csv";
    double pred_mass = 0.9;
    CLI::App* predict = app.add_subcommand("predict", "Geolocate query samples with a trained model");
    predict->add_option("--model", pred_model, "Model file")->required()->check(CLI::ExistingFile);
    predict->add_option("--queries", pred_queries, "Query CSV")->required()->check(CLI::ExistingFile);
    predict->add_option("--out", pred_out, "Output predictions CSV")->required();
    predict->add_option("--mass", pred_mass, "Prediction region mass");
    predict->add_option("--surface-prefix", pred_surface_prefix, "Write per-query surface files at this prefix");
    predict->add_option("--surface-format", pred_surface_format, "csv|geojson")
        ->check(CLI::IsMember({"csv", "geojson"}));

    ConfigOverlay cv_overlay;
    ModelOpts cv_opts;
    AreaOpts cv_areas;
    std::string cv_data, cv_domain, cv_json, cv_csv, cv_samples, cv_oracle, cv_field_out;
    std::size_t cv_folds = 10;
    double cv_mass = 0.9, cv_bandwidth = 100.0;
    bool cv_country = false;
    std::uint64_t cv_seed = 0;
    CLI::App* cv = app.add_subcommand("cv", "Ten-fold cross-validated evaluation");
    cv->add_option("--config", cv_overlay.path, "JSON config; flags override it")->check(CLI::ExistingFile);
    cv->add_option("--data", cv_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    cv->add_option("--domain", cv_domain, "Domain GeoJSON")->required()->check(CLI::ExistingFile);
    cv_overlay.bind(cv->add_option("--folds", cv_folds, "Fold count"), "folds", cv_folds);
    cv_overlay.bind(cv->add_option("--mass", cv_mass, "Prediction region mass"), "mass", cv_mass);
    cv->add_flag("--country-mode", cv_country, "Report area accuracy only (no point-error metrics)");
    cv->add_option("--seed", cv_seed, "Master RNG seed")->required();
    cv->add_option("--report-json", cv_json, "Write the JSON report here");
    cv->add_option("--report-csv", cv_csv, "Write the tabular summary here");
    cv->add_option("--per-sample-out", cv_samples, "Write per-sample results CSV here");
    cv->add_option("--oracle-fields", cv_oracle, "Taxon fields JSON; adds the oracle error column")
        ->check(CLI::ExistingFile);
    cv->add_option("--error-field-out", cv_field_out, "Write the smoothed error field CSV here");
    cv_overlay.bind(cv->add_option("--bandwidth-km", cv_bandwidth, "Error-field kernel bandwidth"),
                    "bandwidth_km", cv_bandwidth);
    cv_opts.add_to(cv, cv_overlay);
    cv_areas.add_to(cv);

    std::string surf_model, surf_queries, surf_prefix, surf_format = "csv";
    CLI::App* surf = app.add_subcommand("export-surface", "Write intensity surfaces for query samples");
    surf->add_option("--model", surf_model, "Model file")->required()->check(CLI::ExistingFile);
    surf->add_option("--queries", surf_queries, "Query CSV")->required()->check(CLI::ExistingFile);
    surf->add_option("--out-prefix", surf_prefix, "Output path prefix")->required();
    surf->add_option("--format", surf_format, "csv|geojson")->check(CLI::IsMember({"csv", "geojson"}));

    std::string ef_results, ef_domain, ef_out;
    double ef_bandwidth = 100.0, ef_res = 0.25;
    CLI::App* ef = app.add_subcommand("export-error-field", "Smooth per-sample cv results into an error field");
    ef->add_option("--results", ef_results, "Per-sample results CSV from cv")->required()->check(CLI::ExistingFile);
    ef->add_option("--domain", ef_domain, "Domain GeoJSON")->required()->check(CLI::ExistingFile);
    ef->add_option("--out", ef_out, "Output CSV")->required();
    ef->add_option("--bandwidth-km", ef_bandwidth, "Gaussian kernel bandwidth");
    ef->add_option("--grid-res", ef_res, "Grid resolution, degrees");

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads > 0) set_default_thread_count(threads);
        if (gen->parsed()) {
            return cmd_gen(cfg_gen_domain, cfg_gen_config, cfg_gen_out, cfg_gen_fields, gen_seed,
                           gen_n_opt->count() ? std::optional<unsigned>(gen_n) : std::nullopt,
                           gen_p_opt->count() ? std::optional<unsigned>(gen_p) : std::nullopt);
        }
        if (train->parsed()) {
            train_overlay.apply();
            return cmd_train(train_data, train_domain, train_opts, train_areas, train_seed, train_out);
        }
        if (predict->parsed())
            return cmd_predict(pred_model, pred_queries, pred_out, pred_mass, pred_surface_prefix,
                               pred_surface_format);
        if (cv->parsed()) {
            cv_overlay.apply();
            return cmd_cv(cv_data, cv_domain, cv_opts, cv_areas, cv_folds, cv_mass, cv_country, cv_seed,
                          cv_json, cv_csv, cv_samples, cv_oracle, cv_field_out, cv_bandwidth);
        }
        if (surf->parsed()) {
            const EnsembleModel model = load_model(surf_model);
            const Dataset queries = load_samples(surf_queries);
            for (const Sample& q : queries.samples) {
                if (!q.features.empty() && q.features.back() >= model.p)
                    throw std::runtime_error("query '" + q.id + "': feature index out of range for model");
                const std::vector<double> surface = density_grid(model, q.features);
                const std::string base = surf_prefix + q.id;
                if (surf_format == "geojson")
                    write_surface_geojson(base + ".geojson", model.grid, surface);
                else
                    write_surface_csv(base + ".csv", model.grid, surface);
            }
            std::cerr << "exported " << queries.size() << " surfaces\n";
            return 0;
        }
        if (ef->parsed()) {
            const Domain domain = load_domain_geojson(ef_domain);
            const Grid grid(domain, ef_res);
            const auto results = read_per_sample_csv(ef_results);
            write_error_field_csv(ef_out, error_field(results, ef_bandwidth, grid));
            std::cerr << "error field -> " << ef_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
