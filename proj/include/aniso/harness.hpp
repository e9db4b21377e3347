#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "aniso/calderon.hpp"
#include "aniso/grids_atoms.hpp"
#include "aniso/pasio.hpp"
#include "aniso/transforms.hpp"
#include "aniso/weights.hpp"

namespace aniso {

// Flat `key = value` config with [section] prefixes ("section.key").
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return items_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    double num(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    void set(const std::string& key, const std::string& value);
    const std::map<std::string, std::string>& items() const { return items_; }

private:
    std::map<std::string, std::string> items_;
};

// "2" -> [[2]]; "1.5,0;0,4" -> rows split by ';'
Eigen::MatrixXd matrix_from_string(const std::string& text);

// Real random field whose spectrum is the window's partition coverage
// (band-limited inside the certified shells), normalized to unit L2.
GridFunction random_band_limited(const GridFunction& like, const CalderonPair& p1,
                                 const CalderonPair& p2, ScaleWindow w1, ScaleWindow w2,
                                 std::mt19937_64& rng);

// Same continuum field on the 2x refined grid (spectrum embedding).
GridFunction refine2x(const GridFunction& f);

ScaleWindow clip_window(ScaleWindow wanted, const CalderonPair& p);

// ------------------------------------------------------------ experiments

struct NormEquivRow {
    int f_id = 0;
    double f_norm = 0.0, s_norm = 0.0, g_norm = 0.0;
};

struct NormEquivResult {
    std::vector<NormEquivRow> rows, rows_fine;
    double spread = 0.0, spread_fine = 0.0;
    double drift = 0.0;
    ScaleWindow used1, used2;
    std::string weight_spec;
    double p = 2.0;
};

NormEquivResult run_norm_equivalence(const Config& cfg);

struct T11Result {
    std::vector<double> ratios_coarse, ratios_fine;
    double sup_coarse = 0.0, sup_fine = 0.0, drift = 0.0;
    double kernel_k2_ratio = 0.0;  // Cauchy ratio from the precheck
    std::string weight_spec;
    double p = 2.0;
};

T11Result run_t11(const Config& cfg);

struct T12Result {
    std::vector<double> masses;  // tail mass per gamma
    double slope = 0.0;          // fitted d log(mass) / d gamma
    double eta1 = 0.0, eta2 = 0.0, r = 0.0;
    double target = 0.0;  // 0.5 * eta1 * log b1 (acceptance floor on |slope|)
    int fitted_points = 0;
    double gamma0_mass = 0.0;
};

T12Result run_t12_decay(const Config& cfg);

// CSV/JSON persistence: norms and ratios emit rows {experiment,p,weight,value}.
void write_csv_rows(const std::string& path,
                    const std::vector<std::array<std::string, 4>>& rows);
void write_manifest(const std::string& path, const Config& cfg,
                    const std::map<std::string, std::string>& extra);

}  // namespace aniso
