#include "aniso/harness.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "aniso/bump.hpp"
#include "aniso/kernels.hpp"

namespace aniso {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line, section;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, "NonFinite", "config line without '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        cfg.items_[section.empty() ? key : section + "." + key] = val;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "NonFinite", "cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    const auto it = items_.find(key);
    return it == items_.end() ? fallback : it->second;
}

double Config::num(const std::string& key, double fallback) const {
    const auto it = items_.find(key);
    return it == items_.end() ? fallback : std::stod(it->second);
}

int Config::integer(const std::string& key, int fallback) const {
    const auto it = items_.find(key);
    return it == items_.end() ? fallback : std::stoi(it->second);
}

void Config::set(const std::string& key, const std::string& value) { items_[key] = value; }

Eigen::MatrixXd matrix_from_string(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream rs(text);
    std::string row;
    while (std::getline(rs, row, ';')) {
        std::vector<double> vals;
        std::istringstream cs(row);
        std::string cell;
        while (std::getline(cs, cell, ',')) vals.push_back(std::stod(trim(cell)));
        rows.push_back(vals);
    }
    require(!rows.empty(), "NonFinite", "empty matrix string");
    const auto n = rows.size();
    Eigen::MatrixXd m(n, rows[0].size());
    for (std::size_t i = 0; i < n; ++i) {
        require(rows[i].size() == rows[0].size(), "NonFinite", "ragged matrix string");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

GridFunction random_band_limited(const GridFunction& like, const CalderonPair& p1,
                                 const CalderonPair& p2, ScaleWindow w1, ScaleWindow w2,
                                 std::mt19937_64& rng) {
    GridFunction noise = GridFunction::like(like);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : noise.values) v = gauss(rng);
    const int n1 = p1.dilation().dim();
    // inner window keeps the band strictly inside the certified coverage
    const ScaleWindow i1{w1.lo + 1, w1.hi - 1}, i2{w2.lo + 1, w2.hi - 1};
    require(i1.lo <= i1.hi && i2.lo <= i2.hi, "WindowOutsideCertifiedRange",
            "windows too narrow for a band-limited family");
    GridFunction f = fftutil::apply_multiplier(noise, [&](const double* xi) {
        double c1 = 0.0, c2 = 0.0;
        for (int k = i1.lo; k <= i1.hi; ++k) c1 += p1.psi_hat_scaled_at(xi, k);
        for (int k = i2.lo; k <= i2.hi; ++k) c2 += p2.psi_hat_scaled_at(xi + n1, k);
        return c1 * c2;
    });
    const double nrm = f.l2();
    require(nrm > 0.0, "NonFinite", "degenerate random field");
    kernels::scale(f.values.data(), f.size(), 1.0 / nrm);
    return f;
}

GridFunction refine2x(const GridFunction& f) {
    std::vector<int> shape2(f.shape);
    for (int& s : shape2) s *= 2;
    GridFunction fine(shape2, f.halfwidth, f.domain);
    const fftutil::cvec F = fftutil::analyze(f);
    fftutil::cvec G(fine.size(), {0.0, 0.0});
    // centered embedding: fine index = coarse index + N/2 per axis
    for (std::size_t i = 0; i < F.size(); ++i) {
        std::size_t r = i, g = 0;
        for (int a = f.dim() - 1; a >= 0; --a) {
            const int idx = static_cast<int>(r % f.shape[a]);
            r /= f.shape[a];
            const int fidx = idx + f.shape[a] / 2;
            // row-major accumulate with fine strides, axes processed in reverse
            std::size_t stride = 1;
            for (int b = fine.dim() - 1; b > a; --b) stride *= fine.shape[b];
            g += stride * static_cast<std::size_t>(fidx);
        }
        G[g] = F[i];
    }
    return fftutil::synthesize(fine, G);
}

ScaleWindow clip_window(ScaleWindow wanted, const CalderonPair& p) {
    ScaleWindow w{std::max(wanted.lo, p.scale_lo()), std::min(wanted.hi, p.scale_hi())};
    require(w.lo <= w.hi, "WindowOutsideCertifiedRange", "window clips to empty");
    return w;
}

namespace {

struct ProductSetup {
    Dilation d1, d2;
    GridFunction grid;
    CalderonPair pair1, pair2;
    ScaleWindow w1, w2;
    WeightField weight;
};

ProductSetup product_setup(const Config& cfg, int n_override = 0) {
    const Eigen::MatrixXd a1 = matrix_from_string(cfg.get("dilation.a1", "2"));
    const Eigen::MatrixXd a2 = matrix_from_string(cfg.get("dilation.a2", "2"));
    Dilation d1 = Dilation::make(a1);
    Dilation d2 = Dilation::make(a2);
    const int N = n_override > 0 ? n_override : cfg.integer("grid.n", 512);
    const double L = cfg.num("grid.l", 32.0);
    const int dim = d1.dim() + d2.dim();
    GridFunction grid(std::vector<int>(dim, N), std::vector<double>(dim, L));

    GridFunction axis1(std::vector<int>(d1.dim(), N), std::vector<double>(d1.dim(), L));
    GridFunction axis2(std::vector<int>(d2.dim(), N), std::vector<double>(d2.dim(), L));
    const int s = cfg.integer("calderon.order", 3);
    CalderonPair p1 = build_calderon_pair(d1, s, axis1);
    CalderonPair p2 = build_calderon_pair(d2, s, axis2);

    ScaleWindow want{cfg.integer("scales.lo", -4), cfg.integer("scales.hi", 4)};
    ScaleWindow w1 = clip_window(want, p1);
    ScaleWindow w2 = clip_window(want, p2);

    WeightField wf = weight_from_spec(cfg.get("weight.spec", "one"), grid, d1, d2);
    return ProductSetup{std::move(d1), std::move(d2), std::move(grid), std::move(p1),
                        std::move(p2), w1, w2, std::move(wf)};
}

}  // namespace

NormEquivResult run_norm_equivalence(const Config& cfg) {
    ProductSetup su = product_setup(cfg);
    const double p = cfg.num("norm.p", 2.0);
    require(p > 1.0, "NonFinite", "norm equivalence wants p in (1, inf)");
    const int count = cfg.integer("family.count", 20);
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.num("family.seed", 42)));

    NormEquivResult res;
    res.used1 = su.w1;
    res.used2 = su.w2;
    res.weight_spec = su.weight.analytic_tag;
    res.p = p;

    // weight sanity at p: the A_p estimate must be finite on a small window
    if (su.weight.analytic_tag != "one")
        product_ap_estimate(su.weight, p, -2, 2, -2, 2, 4);

    std::vector<GridFunction> family;
    for (int i = 0; i < count; ++i)
        family.push_back(random_band_limited(su.grid, su.pair1, su.pair2, su.w1, su.w2, rng));

    const bool refine = cfg.integer("refine.enabled", 1) != 0;
    const auto eval_rows = [&](bool fine) {
        std::vector<NormEquivRow> rows;
        for (int i = 0; i < count; ++i) {
            const GridFunction f = fine ? refine2x(family[i]) : family[i];
            const WeightField wf =
                fine ? weight_from_spec(su.weight.analytic_tag, f, su.d1, su.d2)
                     : su.weight;
            NormEquivRow row;
            row.f_id = i;
            row.f_norm = lebesgue_norm(f, p, &wf.samples);
            if (row.f_norm == 0.0) continue;  // zero fields: ratios skipped
            const GridFunction S =
                area_function_product(f, su.pair1, su.pair2, su.w1, su.w2);
            const GridFunction g =
                g_function_product(f, su.pair1, su.pair2, su.w1, su.w2);
            row.s_norm = lebesgue_norm(S, p, &wf.samples);
            row.g_norm = lebesgue_norm(g, p, &wf.samples);
            rows.push_back(row);
        }
        return rows;
    };
    const auto spread_of = [](const std::vector<NormEquivRow>& rows) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& r : rows) {
            for (const double q : {r.s_norm / r.f_norm, r.g_norm / r.f_norm}) {
                lo = std::min(lo, q);
                hi = std::max(hi, q);
            }
        }
        return hi / lo;
    };

    res.rows = eval_rows(false);
    require(!res.rows.empty(), "NonFinite", "empty family");
    res.spread = spread_of(res.rows);
    if (refine) {
        res.rows_fine = eval_rows(true);
        res.spread_fine = spread_of(res.rows_fine);
        res.drift = std::fabs(res.spread_fine / res.spread - 1.0);
    }
    return res;
}

T11Result run_t11(const Config& cfg) {
    const std::string kspec = cfg.get("kernel.spec", "tensorcz:profile=sign");
    const double p = cfg.num("norm.p", 2.0);
    const int count = cfg.integer("family.count", 20);
    const double delta = cfg.num("kernel.delta", 0.25);

    T11Result res;
    res.p = p;

    // order-0 precheck: the (K2) ladder must be Cauchy
    {
        const Eigen::MatrixXd a1 = matrix_from_string(cfg.get("dilation.a1", "2"));
        const Eigen::MatrixXd a2 = matrix_from_string(cfg.get("dilation.a2", "2"));
        Dilation d1 = Dilation::make(a1);
        Dilation d2 = Dilation::make(a2);
        const KernelModel kern = kernel_from_spec(kspec, d1, d2);
        const auto bumps1 = standard_bump_set(d1, kern.N1);
        const auto bumps2 = standard_bump_set(d2, kern.N2);
        const K2Report k2 =
            check_K2(kern, {bumps1[2]}, {bumps2[2]}, 0, 0,
                     cfg.integer("kernel.k2_quad", 512));
        res.kernel_k2_ratio = k2.cauchy_ratio;
    }

    const auto run_grid = [&](int N, std::vector<GridFunction>* keep,
                              const std::vector<GridFunction>* reuse) {
        Config sub = cfg;
        sub.set("grid.n", std::to_string(N));
        ProductSetup su = product_setup(sub, N);
        const KernelModel kern = kernel_from_spec(kspec, su.d1, su.d2);
        std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.num("family.seed", 42)));
        std::vector<double> ratios;
        for (int i = 0; i < count; ++i) {
            GridFunction f =
                reuse ? refine2x((*reuse)[i])
                      : random_band_limited(su.grid, su.pair1, su.pair2, su.w1, su.w2, rng);
            const ApplyResult ar = apply_pasio(kern, f, delta, delta);
            const double fn = lebesgue_norm(f, p, &su.weight.samples);
            const double tn = lebesgue_norm(ar.Tf, p, &su.weight.samples);
            if (fn > 0.0) ratios.push_back(tn / fn);
            if (keep) keep->push_back(std::move(f));
        }
        return ratios;
    };

    std::vector<GridFunction> coarse_family;
    const int Nc = cfg.integer("grid.n", 256);
    res.ratios_coarse = run_grid(Nc, &coarse_family, nullptr);
    res.ratios_fine = run_grid(2 * Nc, nullptr, &coarse_family);
    for (double r : res.ratios_coarse) res.sup_coarse = std::max(res.sup_coarse, r);
    for (double r : res.ratios_fine) res.sup_fine = std::max(res.sup_fine, r);
    res.drift = std::fabs(res.sup_fine / res.sup_coarse - 1.0);
    res.weight_spec = cfg.get("weight.spec", "one");
    return res;
}

T12Result run_t12_decay(const Config& cfg) {
    Config sub = cfg;
    if (!cfg.has("grid.n")) sub.set("grid.n", "2048");
    if (!cfg.has("scales.lo")) sub.set("scales.lo", "-3");
    if (!cfg.has("scales.hi")) sub.set("scales.hi", "3");
    ProductSetup su = product_setup(sub);

    const double p = cfg.num("atom.p", 1.0);
    const double q = cfg.num("atom.q", 2.0);
    const int s1 = cfg.integer("atom.s1", 1);
    const int s2 = cfg.integer("atom.s2", 1);
    const int level = cfg.integer("atom.level", 7);
    const int gamma_max = cfg.integer("atom.gamma_max", 5);
    const double q_w = cfg.num("atom.q_w", 1.0);  // w == 1 default
    const double r = cfg.has("atom.r") ? cfg.num("atom.r", 0.0) : q_w * (1.0 + 1e-3);

    const std::string kspec = cfg.get("kernel.spec", "tensorcz:profile=logsine");
    const KernelModel kern = kernel_from_spec(kspec, su.d1, su.d2);
    // order-(s+1) prerequisite: derived difference bounds at order s
    if (cfg.integer("kernel.precheck", 1) != 0) {
        SampleSpec spec;
        spec.shell_lo = -2;
        spec.shell_hi = 2;
        spec.per_shell = 2;
        check_lemma_32_conditions(kern, s1, s2, 0.5 * su.d1.zeta_minus(),
                                  0.5 * su.d2.zeta_minus(), spec);
    }

    const DyadicGrid g1 = christ_cubes(su.d1);
    const DyadicGrid g2 = christ_cubes(su.d2);
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.num("family.seed", 42)));
    GridFunction seed_f = GridFunction::like(su.grid);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : seed_f.values) v = gauss(rng);

    Eigen::VectorXd origin1 = Eigen::VectorXd::Zero(su.d1.dim());
    Eigen::VectorXd origin2 = Eigen::VectorXd::Zero(su.d2.dim());
    origin1[0] = 1e-9;  // the cube containing a point just right of the corner
    origin2[0] = 1e-9;
    const auto R1 = g1.cube_containing(origin1, level);
    const auto R2 = g2.cube_containing(origin2, level);
    const RectAtom atom = make_rectangular_atom(seed_f, g1, g2, R1, R2, p, q, s1, s2,
                                                su.weight, q_w);
    require(!atom.cert.trivial, "DegenerateRectangle", "atom degenerated to zero");

    // the grid must hold the largest enlargement
    {
        const Enlargement e = enlargements(atom, g1, g2, gamma_max);
        const Eigen::MatrixXd Qinv = su.d1.ball_form(e.index1).inverse();
        const double reach = std::sqrt(su.d1.ellipsoid_level() * Qinv(0, 0));
        require(reach < su.grid.halfwidth[0], "WindowTooSmall",
                "gamma_max enlargement exceeds the grid box");
    }

    const double delta = cfg.num("kernel.delta", 4.0 * su.grid.spacing(0));
    const ApplyResult Ta = apply_pasio(kern, atom.samples, delta, delta);

    // coefficients phi_k * phi_k * (Ta) = psi-hat-scaled multipliers on (Ta)^
    const fftutil::cvec TaF = fftutil::analyze(Ta.Tf);
    const int n1 = su.d1.dim();
    const GridFunction H = h_norm_field(
        su.grid, su.d1, su.d2, su.w1, su.w2, [&](int k1, int k2) {
            return fftutil::synthesize(
                su.grid, fftutil::multiplied_spectrum(su.grid, TaF, [&](const double* xi) {
                    return su.pair1.psi_hat_scaled_at(xi, k1) *
                           su.pair2.psi_hat_scaled_at(xi + n1, k2);
                }));
        });

    T12Result res;
    res.r = r;
    res.eta1 = p * (s1 * su.d1.zeta_minus() + 1.0) - r;
    res.eta2 = p * (s2 * su.d2.zeta_minus() + 1.0) - r;
    require(res.eta1 > 0.0 && res.eta2 > 0.0, "NonFinite", "eta must be positive");
    res.target = 0.5 * res.eta1 * std::log(su.d1.det_abs());

    std::vector<double> xs, ys;
    for (int gamma = 0; gamma <= gamma_max; ++gamma) {
        const GridFunction mask =
            outside_enlargement_mask(su.grid, g1, g2, atom, gamma);
        GridFunction mw = mask;
        kernels::mul(mw.values.data(), mask.values.data(), su.weight.samples.values.data(),
                     mw.size());
        const double mass =
            kernels::block_pow_sum(H.values.data(), mw.values.data(), H.size(), p) *
            H.cell_volume();
        res.masses.push_back(mass);
        if (mass > 0.0) {
            xs.push_back(gamma);
            ys.push_back(std::log(mass));
        }
    }
    res.gamma0_mass = res.masses.empty() ? 0.0 : res.masses.front();
    res.fitted_points = static_cast<int>(xs.size());
    if (res.fitted_points >= 2) res.slope = fit_line(xs, ys).slope;
    return res;
}

void write_csv_rows(const std::string& path,
                    const std::vector<std::array<std::string, 4>>& rows) {
    std::ofstream f(path);
    require(f.good(), "NonFinite", "cannot open " + path);
    f << "experiment,p,weight,value\n";
    for (const auto& r : rows) f << r[0] << "," << r[1] << "," << r[2] << "," << r[3] << "\n";
}

void write_manifest(const std::string& path, const Config& cfg,
                    const std::map<std::string, std::string>& extra) {
    nlohmann::json j;
    for (const auto& [k, v] : cfg.items()) j["config"][k] = v;
    for (const auto& [k, v] : extra) j["result"][k] = v;
    std::ofstream f(path);
    require(f.good(), "NonFinite", "cannot open " + path);
    f << j.dump(2) << "\n";
}

}  // namespace aniso
