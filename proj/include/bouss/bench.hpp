#pragma once

// Differentially heated cavity benchmark: case setup, end-to-end runs over
// (mesh, method, acceleration, line search), and CSV persistence.

#include <cctype>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bouss/anderson.hpp"
#include "bouss/fixedpoint.hpp"
#include "bouss/linesearch.hpp"

namespace bouss {

enum class Method { picard, newton };

inline const char* to_string(Method m) { return m == Method::picard ? "picard" : "newton"; }

inline Method method_from_string(const std::string& s) {
    if (s == "picard") return Method::picard;
    if (s == "newton") return Method::newton;
    throw std::invalid_argument("unknown method: " + s);
}

struct MeshSpec {
    int n = 16;
    int boundary_layers = 1;
    bool alfeld = false;  // forced on when Scott-Vogelius pressure is selected
};

// Best damping found in the cavity sweeps: β=0.3 near Ra=1e5 and β=0.05 for
// Ra >= 5e5; the Newton variant defaults to the undamped step.
inline double default_cavity_beta(double Ra, Method method) {
    if (method == Method::newton) return 1.0;
    if (Ra < 1e5) return 1.0;
    if (Ra < 5e5) return 0.3;
    return 0.05;
}

struct BenchmarkCase {
    MeshSpec mesh;
    ElementFamily family;  // Taylor-Hood by default, Scott-Vogelius selectable
    ProblemConfig problem;
    Method method = Method::picard;
    AndersonConfig anderson;
    LineSearchSpec linesearch;
    std::string label;

    // Cavity defaults: nu=kappa=0.01, Ra set through Ri, no body sources,
    // tolerance 1e-8, blowup 1e4, 500 Picard / 200 Newton iterations.
    static BenchmarkCase cavity(double Ra, Method method) {
        BenchmarkCase c;
        c.problem = ProblemConfig::cavity(Ra);
        c.method = method;
        c.anderson.tolerance = 1e-8;
        c.anderson.blowup_threshold = 1e4;
        c.anderson.max_iterations = method == Method::picard ? 500 : 200;
        c.anderson.beta = 1.0;
        return c;
    }

    void validate() const {
        if (mesh.n < 1) throw std::invalid_argument("benchmark: mesh.n must be >= 1");
        if (mesh.boundary_layers < 0) throw std::invalid_argument("benchmark: boundary_layers must be >= 0");
        problem.validate();
        anderson.validate();
        linesearch.validate();
        if (linesearch.kind != LineSearchKind::none) {
            if (method != Method::newton || anderson.depth != 0 ||
                anderson.depth_mode != DepthMode::constant || anderson.beta_grid)
                throw std::invalid_argument("benchmark: line searches apply to the plain Newton iteration only");
        }
    }

    std::string describe_beta_mode() const {
        if (linesearch.kind == LineSearchKind::ls1) return "ls1";
        if (linesearch.kind == LineSearchKind::ls2) return "ls2";
        if (anderson.beta_grid) return "beta-grid";
        std::ostringstream os;
        os << "beta=" << anderson.beta;
        return os.str();
    }

    std::string describe_depth() const {
        if (anderson.depth_mode == DepthMode::constant) return std::to_string(anderson.depth);
        std::ostringstream os;
        os << anderson.m_small << '/' << anderson.m_large << '@' << anderson.stage_threshold;
        return os.str();
    }

    std::string default_label() const {
        std::ostringstream os;
        os << to_string(method) << "_ra" << problem.rayleigh() << "_m" << describe_depth();
        if (linesearch.kind == LineSearchKind::ls1) os << "_ls1";
        else if (linesearch.kind == LineSearchKind::ls2) os << "_ls2";
        else if (anderson.beta_grid) os << "_betagrid";
        else os << "_beta" << anderson.beta;
        std::string s = os.str();
        for (char& ch : s)
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '.') ch = '-';
        return s;
    }
};

// End-to-end execution of one case: mesh -> spaces -> accelerated iteration.
// Failures land in the record (status B plus diagnostic), never escape.
inline ConvergenceRecord run_case(const BenchmarkCase& c, std::ostream* iteration_log = nullptr) {
    ConvergenceRecord rec;
    rec.label = c.label.empty() ? c.default_label() : c.label;
    try {
        c.validate();
        Mesh mesh = uniform_square_mesh(c.mesh.n);
        if (c.mesh.boundary_layers > 0) mesh = refine_boundary_layer(mesh, c.mesh.boundary_layers);
        if (c.mesh.alfeld || c.family.pressure == PressureKind::discontinuous_p1) mesh = alfeld_split(mesh);

        BoussinesqProblem problem(std::move(mesh), c.family, BoundarySpec::cavity_benchmark(), c.problem);
        const StateLayout& layout = problem.layout();
        const BInnerProduct& bip = problem.b_inner_product();

        InnerProduct ip = [&bip](const Vector& a, const Vector& b) { return bip.dot(a, b); };
        const Method method = c.method;
        FixedPointMap g = [&problem, &layout, method](const Vector& x) {
            const State s = unpack(layout, x);
            const State n = method == Method::picard ? problem.picard_apply(s) : problem.newton_apply(s);
            return pack(layout, n);
        };

        StepSizeSelector selector;
        if (c.linesearch.kind != LineSearchKind::none) {
            const LineSearchSpec ls = c.linesearch;
            selector = [g, ip, ls](const Vector& x, const Vector& w, double rnorm) {
                // a trial solve that fails or returns garbage just disqualifies
                // that ratio
                auto phi = [&](double r) {
                    try {
                        const Vector xt = x + r * w;
                        const Vector gt = g(xt);
                        if (!gt.allFinite()) return std::numeric_limits<double>::infinity();
                        const Vector wt = gt - xt;
                        return std::sqrt(std::max(0.0, ip(wt, wt)));
                    } catch (const std::exception&) {
                        return std::numeric_limits<double>::infinity();
                    }
                };
                return ls.kind == LineSearchKind::ls1 ? ls1(rnorm, phi, ls).ratio : ls2(phi, ls).ratio;
            };
        }

        const Vector x0 = pack(layout, problem.initial_state());
        const std::string label = rec.label;
        rec = drive(g, x0, c.anderson, ip, selector, iteration_log);
        rec.label = label;
    } catch (const std::exception& e) {
        rec.status = SolveStatus::blowup;
        rec.diagnostic = e.what();
    }
    return rec;
}

// Independent cases; executed serially so records are reproducible.
inline std::vector<ConvergenceRecord> run_sweep(const std::vector<BenchmarkCase>& cases,
                                                std::ostream* progress = nullptr) {
    std::vector<ConvergenceRecord> out;
    out.reserve(cases.size());
    for (const BenchmarkCase& c : cases) {
        out.push_back(run_case(c));
        if (progress) {
            const ConvergenceRecord& r = out.back();
            (*progress) << r.label << ": " << to_string(r.status) << " after " << r.iteration_count
                        << " iterations (" << r.seconds << " s)\n";
        }
    }
    return out;
}

// --- CSV persistence --------------------------------------------------------

struct CaseSummary {
    double Ri = 0.0;
    double Ra = 0.0;
    std::string method;
    std::string m;
    std::string beta_mode;
    std::string status;
    int iterations = 0;
    double seconds = 0.0;
};

inline CaseSummary summarize(const BenchmarkCase& c, const ConvergenceRecord& r) {
    CaseSummary s;
    s.Ri = c.problem.Ri;
    s.Ra = c.problem.rayleigh();
    s.method = to_string(c.method);
    s.m = c.describe_depth();
    s.beta_mode = c.describe_beta_mode();
    s.status = to_string(r.status);
    s.iterations = r.iteration_count;
    s.seconds = r.seconds;
    return s;
}

inline void write_history_csv(const ConvergenceRecord& rec, std::ostream& os) {
    os << "k,residual_Bnorm,xi,sigma,m_k,beta_k\n";
    for (const IterationLog& il : rec.iterations)
        os << il.k << ',' << detail::fmt(il.rnorm) << ',' << detail::fmt(il.xi) << ','
           << detail::fmt(il.sigma) << ',' << il.m_k << ',' << detail::fmt(il.beta_k) << '\n';
}

inline void write_summary_csv(const std::vector<CaseSummary>& rows, std::ostream& os) {
    os << "Ri,Ra,method,m,beta_mode,status,iterations,seconds\n";
    for (const CaseSummary& s : rows)
        os << detail::fmt(s.Ri) << ',' << detail::fmt(s.Ra) << ',' << s.method << ',' << s.m << ','
           << s.beta_mode << ',' << s.status << ',' << s.iterations << ',' << detail::fmt(s.seconds) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    return out;
}

}  // namespace detail

inline std::vector<IterationLog> read_history_csv(std::istream& is) {
    std::vector<IterationLog> out;
    std::string line;
    if (!std::getline(is, line)) return out;
    if (line != "k,residual_Bnorm,xi,sigma,m_k,beta_k")
        throw std::runtime_error("read_history_csv: unexpected header: " + line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 6) throw std::runtime_error("read_history_csv: bad row: " + line);
        IterationLog il;
        il.k = std::stoi(f[0]);
        il.rnorm = std::strtod(f[1].c_str(), nullptr);
        il.xi = std::strtod(f[2].c_str(), nullptr);
        il.sigma = std::strtod(f[3].c_str(), nullptr);
        il.m_k = std::stoi(f[4]);
        il.beta_k = std::strtod(f[5].c_str(), nullptr);
        out.push_back(il);
    }
    return out;
}

inline std::vector<CaseSummary> read_summary_csv(std::istream& is) {
    std::vector<CaseSummary> out;
    std::string line;
    if (!std::getline(is, line)) return out;
    if (line != "Ri,Ra,method,m,beta_mode,status,iterations,seconds")
        throw std::runtime_error("read_summary_csv: unexpected header: " + line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 8) throw std::runtime_error("read_summary_csv: bad row: " + line);
        CaseSummary s;
        s.Ri = std::strtod(f[0].c_str(), nullptr);
        s.Ra = std::strtod(f[1].c_str(), nullptr);
        s.method = f[2];
        s.m = f[3];
        s.beta_mode = f[4];
        s.status = f[5];
        s.iterations = std::stoi(f[6]);
        s.seconds = std::strtod(f[7].c_str(), nullptr);
        out.push_back(s);
    }
    return out;
}

inline void write_history_csv_file(const ConvergenceRecord& rec, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_history_csv(rec, os);
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline void write_summary_csv_file(const std::vector<CaseSummary>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_summary_csv(rows, os);
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace bouss
