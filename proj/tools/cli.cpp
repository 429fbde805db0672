#include "sdq_cli.hpp"

#include <sdindex/baselines.hpp>
#include <sdindex/dataset.hpp>
#include <sdindex/error.hpp>
#include <sdindex/multidim.hpp>
#include <sdindex/snapshot.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace sdq {

namespace {

using namespace sdindex;

struct index_flags {
    std::vector<std::string> pairing;
    std::vector<double> angles;
    std::size_t branching = 16;
    double rebuild_threshold = 0.1;
};

void add_index_flags(CLI::App& cmd, index_flags& f)
{
    cmd.add_option("--pairing", f.pairing,
                   "explicit pairs as repulsive:attractive, comma separated")
        ->delimiter(',');
    cmd.add_option("--angles", f.angles, "indexed angles in degrees (90 is the x fallback)")
        ->delimiter(',');
    cmd.add_option("--branching", f.branching, "tree fan-out")->check(CLI::Range(2, 1 << 20));
    cmd.add_option("--rebuild-threshold", f.rebuild_threshold, "imbalance share that triggers a rebuild")
        ->check(CLI::Range(0.0, 1.0));
}

tree_config make_config(const index_flags& f)
{
    tree_config cfg;
    cfg.branching = f.branching;
    cfg.rebuild_threshold = f.rebuild_threshold;
    if (!f.angles.empty()) {
        cfg.angles = f.angles;
    }
    return cfg;
}

std::vector<std::size_t> resolve(const dataset& data, const std::vector<std::string>& names)
{
    std::vector<std::size_t> out;
    for (const auto& n : names) {
        const auto d = data.dimension(n);
        if (!d) {
            throw error(errc::invalid_argument, "unknown column '" + n + "'");
        }
        out.push_back(*d);
    }
    return out;
}

index_schema make_schema(const dataset& data, const std::vector<std::string>& repulsive,
                         const std::vector<std::string>& attractive,
                         const std::vector<std::string>& pairs)
{
    index_schema schema;
    schema.repulsive = resolve(data, repulsive);
    schema.attractive = resolve(data, attractive);
    for (const auto& p : pairs) {
        const auto colon = p.find(':');
        if (colon == std::string::npos) {
            throw error(errc::invalid_argument, "pairing entry '" + p + "' must be repulsive:attractive");
        }
        const auto r = resolve(data, {p.substr(0, colon)});
        const auto a = resolve(data, {p.substr(colon + 1)});
        schema.explicit_pairs.push_back({r.front(), a.front()});
    }
    return schema;
}

std::vector<double> expand_weights(const std::vector<double>& given, std::size_t count,
                                   const char* flag)
{
    if (given.empty()) {
        return std::vector<double>(count, 1.0);
    }
    if (given.size() == 1) {
        return std::vector<double>(count, given.front());
    }
    if (given.size() != count) {
        throw error(errc::invalid_argument, std::string(flag) + " needs one weight per dimension");
    }
    return given;
}

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Output stream that is either `fallback` (for "-") or a file.
class sink {
public:
    sink(const std::string& path, std::ostream& fallback) : out_(&fallback)
    {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw error(errc::io_error, "cannot write " + path);
            }
            out_ = &file_;
        }
    }
    std::ostream& get() { return *out_; }

private:
    std::ofstream file_;
    std::ostream* out_;
};

// ---- gen --------------------------------------------------------------------

struct gen_args {
    std::string dist = "uniform";
    std::size_t n = 0;
    std::size_t dims = 2;
    double sigma = 0.05;
    std::uint64_t seed = 1;
    std::string out = "-";
};

void run_gen(const gen_args& a, std::ostream& out)
{
    generator_params p;
    p.dist = parse_distribution(a.dist);
    p.n = a.n;
    p.dims = a.dims;
    p.sigma = a.sigma;
    p.seed = a.seed;
    const dataset data = generate(p);
    sink s(a.out, out);
    write_csv(s.get(), data);
}

// ---- build ------------------------------------------------------------------

struct build_args {
    std::string data;
    std::vector<std::string> repulsive;
    std::vector<std::string> attractive;
    index_flags index;
    std::string out;
};

void run_build(const build_args& a, std::ostream& out)
{
    dataset data = load_csv(a.data);
    index_schema schema = make_schema(data, a.repulsive, a.attractive, a.index.pairing);
    const multidim_index idx = multidim_index::build(std::move(data), std::move(schema),
                                                     make_config(a.index));
    const auto names = idx.data().names();
    out << "points " << idx.data().size() << '\n';
    for (std::size_t i = 0; i < idx.pairs().pairs.size(); ++i) {
        const auto& p = idx.pairs().pairs[i];
        const auto& t = idx.trees()[i];
        out << "pair " << names[p.repulsive] << ' ' << names[p.attractive] << ": tree height "
            << t.height() << ", " << t.angle_count() << " indexed angles, "
            << idx.top1()[i].cells().size() << " top-1 cells\n";
    }
    for (std::size_t d : idx.pairs().residual_repulsive) {
        out << "residual " << names[d] << " (repulsive)\n";
    }
    for (std::size_t d : idx.pairs().residual_attractive) {
        out << "residual " << names[d] << " (attractive)\n";
    }
    if (!a.out.empty()) {
        save_snapshot(a.out, idx);
        out << "snapshot " << a.out << '\n';
    }
}

// ---- query ------------------------------------------------------------------

struct query_args {
    std::string data;
    std::string index;
    std::vector<double> query;
    std::vector<std::string> repulsive;
    std::vector<std::string> attractive;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::size_t k = 5;
    std::string method = "sdindex";
    index_flags flags;
};

void run_query(const query_args& a, std::ostream& out, std::ostream& err)
{
    std::optional<multidim_index> idx;
    dataset loaded;
    const dataset* data = nullptr;
    if (!a.index.empty()) {
        idx = load_snapshot(a.index);
        data = &idx->data();
    } else {
        loaded = load_csv(a.data);
        data = &loaded;
    }

    query_spec spec;
    spec.coords = a.query;
    spec.k = a.k;
    if (a.repulsive.empty() && a.attractive.empty()) {
        if (!idx) {
            throw error(errc::invalid_argument, "--repulsive/--attractive are required with --data");
        }
        spec.repulsive = idx->schema().repulsive;
        spec.attractive = idx->schema().attractive;
    } else {
        spec.repulsive = resolve(*data, a.repulsive);
        spec.attractive = resolve(*data, a.attractive);
    }
    spec.alpha = expand_weights(a.alpha, spec.repulsive.size(), "--alpha");
    spec.beta = expand_weights(a.beta, spec.attractive.size(), "--beta");
    validate(spec, data->dims());

    std::vector<scored> ranked;
    if (a.method == "scan") {
        ranked = scan_topk(*data, spec);
    } else if (a.method == "ta") {
        ranked = ta_index(*data).topk(*data, spec).ranked;
    } else {
        if (!idx) {
            index_schema schema = make_schema(loaded, a.repulsive, a.attractive, a.flags.pairing);
            idx = multidim_index::build(std::move(loaded), std::move(schema), make_config(a.flags));
            data = &idx->data();
        }
        const solve_result r = idx->solve(spec);
        if (r.used_scan) {
            err << "sdq: warning: query roles differ from the index schema, answered by scan\n";
        }
        ranked = r.ranked;
    }
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        out << (i + 1) << ',' << data->label(ranked[i].id) << ',' << fixed6(ranked[i].score) << '\n';
    }
}

// ---- bench ------------------------------------------------------------------

struct bench_args {
    std::vector<std::string> dists = {"uniform"};
    std::vector<std::size_t> sizes = {1000, 10000};
    std::vector<std::size_t> dims = {2};
    std::vector<std::size_t> k_values = {5};
    std::vector<std::string> methods = {"sdindex", "scan", "ta"};
    std::size_t queries = 100;
    std::uint64_t seed = 1;
    double sigma = 0.05;
    bool report_build = false;
    std::string out = "-";
    index_flags flags;
};

std::uint64_t fnv1a(std::uint64_t h, const std::string& s)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void run_bench(const bench_args& a, std::ostream& out, std::ostream& err)
{
    for (const auto& m : a.methods) {
        if (m != "sdindex" && m != "scan" && m != "ta") {
            throw error(errc::invalid_argument, "unknown method '" + m + "'");
        }
    }
    for (const auto& d : a.dists) {
        (void)parse_distribution(d);
    }
    sink s(a.out, out);
    std::ostream& csv = s.get();
    csv << "method,dist,n,dims,k,queries,mean_us,p95_us,checksum\n";
    using clock = std::chrono::steady_clock;

    for (const auto& dist_name : a.dists) {
        for (std::size_t n : a.sizes) {
            for (std::size_t dims : a.dims) {
                generator_params gp;
                gp.dist = parse_distribution(dist_name);
                gp.n = n;
                gp.dims = dims;
                gp.sigma = a.sigma;
                gp.seed = a.seed;
                dataset data = generate(gp);
                const dimension_roles roles = default_roles(dims);

                const bool want_index = std::count(a.methods.begin(), a.methods.end(), "sdindex") > 0;
                const bool want_ta = std::count(a.methods.begin(), a.methods.end(), "ta") > 0;
                auto t0 = clock::now();
                std::optional<multidim_index> idx;
                if (want_index) {
                    idx = multidim_index::build(data, {roles.repulsive, roles.attractive, {}},
                                                make_config(a.flags));
                }
                auto t1 = clock::now();
                std::optional<ta_index> ta;
                if (want_ta) {
                    ta.emplace(data);
                }
                auto t2 = clock::now();
                if (a.report_build) {
                    err << "build " << dist_name << " n=" << n << " dims=" << dims << ": sdindex "
                        << std::chrono::duration<double, std::milli>(t1 - t0).count() << " ms, ta "
                        << std::chrono::duration<double, std::milli>(t2 - t1).count() << " ms\n";
                }

                for (std::size_t k : a.k_values) {
                    random_engine rng(a.seed ^ (0x9E3779B97F4A7C15ull * (k + 1)));
                    std::vector<query_spec> specs;
                    for (std::size_t i = 0; i < a.queries; ++i) {
                        specs.push_back(random_query(rng, dims, roles, k));
                    }
                    for (const auto& method : a.methods) {
                        std::vector<double> micros;
                        std::uint64_t h = 0xcbf29ce484222325ull;
                        for (const auto& spec : specs) {
                            const auto start = clock::now();
                            std::vector<scored> ranked;
                            if (method == "sdindex") {
                                ranked = idx->solve(spec).ranked;
                            } else if (method == "scan") {
                                ranked = scan_topk(data, spec);
                            } else {
                                ranked = ta->topk(data, spec).ranked;
                            }
                            const auto stop = clock::now();
                            micros.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
                            for (const scored& r : ranked) {
                                h = fnv1a(h, std::to_string(r.id) + ",");
                            }
                            h = fnv1a(h, ";");
                        }
                        std::sort(micros.begin(), micros.end());
                        double mean = 0.0;
                        for (double us : micros) {
                            mean += us;
                        }
                        mean /= static_cast<double>(micros.size());
                        const auto p95_at = static_cast<std::size_t>(
                            std::ceil(0.95 * static_cast<double>(micros.size()))) - 1;
                        char line[256];
                        std::snprintf(line, sizeof line, "%s,%s,%zu,%zu,%zu,%zu,%.3f,%.3f,%016llx\n",
                                      method.c_str(), dist_name.c_str(), n, dims, k, a.queries, mean,
                                      micros[p95_at], static_cast<unsigned long long>(h));
                        csv << line;
                    }
                }
            }
        }
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"sdq: top-k queries under mixed similarity/distance scores"};
    app.require_subcommand(1);

    gen_args gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
    gen_cmd->add_option("--dist", gen.dist, "uniform, correlated or anticorrelated")
        ->check(CLI::IsMember({"uniform", "correlated", "anticorrelated"}));
    gen_cmd->add_option("--n", gen.n, "number of points")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--dims", gen.dims, "number of dimensions")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--sigma", gen.sigma, "jitter of the correlated generators")
        ->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--seed", gen.seed, "random seed");
    gen_cmd->add_option("--out", gen.out, "output CSV, - for stdout");

    build_args build;
    auto* build_cmd = app.add_subcommand("build", "build the index and optionally save it");
    build_cmd->add_option("--data", build.data, "dataset CSV")->required();
    build_cmd->add_option("--repulsive", build.repulsive, "repulsive columns")->delimiter(',');
    build_cmd->add_option("--attractive", build.attractive, "attractive columns")->delimiter(',');
    add_index_flags(*build_cmd, build.index);
    build_cmd->add_option("--out", build.out, "snapshot file");

    query_args query;
    auto* query_cmd = app.add_subcommand("query", "answer one top-k query");
    auto* data_opt = query_cmd->add_option("--data", query.data, "dataset CSV");
    auto* index_opt = query_cmd->add_option("--index", query.index, "snapshot written by build");
    data_opt->excludes(index_opt);
    query_cmd->add_option("--query", query.query, "query coordinates, comma separated")
        ->required()
        ->delimiter(',');
    query_cmd->add_option("--repulsive", query.repulsive, "repulsive columns")->delimiter(',');
    query_cmd->add_option("--attractive", query.attractive, "attractive columns")->delimiter(',');
    query_cmd->add_option("--alpha", query.alpha, "repulsive weights")->delimiter(',');
    query_cmd->add_option("--beta", query.beta, "attractive weights")->delimiter(',');
    query_cmd->add_option("-k,--k", query.k, "number of results")->check(CLI::PositiveNumber);
    query_cmd->add_option("--method", query.method, "sdindex, scan or ta")
        ->check(CLI::IsMember({"sdindex", "scan", "ta"}));
    add_index_flags(*query_cmd, query.flags);

    bench_args bench;
    auto* bench_cmd = app.add_subcommand("bench", "time engines over a grid of workloads");
    bench_cmd->add_option("--dists", bench.dists, "distributions")->delimiter(',');
    bench_cmd->add_option("--sizes", bench.sizes, "dataset sizes")->delimiter(',')->check(CLI::PositiveNumber);
    bench_cmd->add_option("--dims", bench.dims, "dimension counts")->delimiter(',')->check(CLI::PositiveNumber);
    bench_cmd->add_option("--k-values", bench.k_values, "k values")->delimiter(',')->check(CLI::PositiveNumber);
    bench_cmd->add_option("--methods", bench.methods, "sdindex, scan, ta")->delimiter(',');
    bench_cmd->add_option("--queries", bench.queries, "queries per cell")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bench.seed, "random seed");
    bench_cmd->add_option("--sigma", bench.sigma, "jitter of the correlated generators")
        ->check(CLI::NonNegativeNumber);
    bench_cmd->add_flag("--report-build", bench.report_build, "print build times to stderr");
    bench_cmd->add_option("--out", bench.out, "results CSV, - for stdout");
    add_index_flags(*bench_cmd, bench.flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "sdq: " << e.what() << '\n';
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    }

    try {
        if (*gen_cmd) {
            run_gen(gen, out);
        } else if (*build_cmd) {
            run_build(build, out);
        } else if (*query_cmd) {
            if (query.data.empty() && query.index.empty()) {
                throw error(errc::invalid_argument, "query needs --data or --index");
            }
            run_query(query, out, err);
        } else if (*bench_cmd) {
            run_bench(bench, out, err);
        }
    } catch (const std::exception& e) {
        err << "sdq: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace sdq
