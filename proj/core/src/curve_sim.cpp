#include "ampm/curve_sim.hpp"

#include <string>

#include "ampm/errors.hpp"
#include "ampm/rng.hpp"

namespace ampm {

double curve_yield(const CurveParams& p, double t_hours) {
    if (!(p.y720 > 0.0) || !(p.k > 0.0))
        throw DataError("curve_yield: y720 and k must be > 0");
    if (t_hours < 0.0)
        throw DataError("curve_yield: negative interval");
    return p.y720 * (2.0 * p.k + 1.0) * t_hours / (24.0 * p.k + t_hours);
}

void SimConfig::validate() const {
    if (n_cows < 1)
        throw ConfigError("simulate: n_cows must be >= 1");
    if (!(y720_sd > 0.0) || !(k_sd > 0.0) || !(interval_sd > 0.0))
        throw ConfigError("simulate: all SDs must be > 0");
    if (!(param_trunc_sds > 0.0))
        throw ConfigError("simulate: parameter truncation width must be > 0");
    if (!(interval_lo < interval_mean && interval_mean < interval_hi))
        throw ConfigError("simulate: need interval_lo < interval_mean < interval_hi");
    if (noise_sd < 0.0)
        throw ConfigError("simulate: noise_sd must be >= 0");
}

MilkingDataset simulate_herd(const SimConfig& cfg) {
    cfg.validate();

    MilkingDataset ds;
    ds.records.reserve(2 * static_cast<std::size_t>(cfg.n_cows));

    for (int i = 0; i < cfg.n_cows; ++i) {
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i));

        CurveParams p;
        p.y720 = sample_tn(cfg.y720_mean, cfg.y720_sd,
                           cfg.y720_mean - cfg.param_trunc_sds * cfg.y720_sd,
                           cfg.y720_mean + cfg.param_trunc_sds * cfg.y720_sd, rng);
        p.k = sample_tn(cfg.k_mean, cfg.k_sd,
                        cfg.k_mean - cfg.param_trunc_sds * cfg.k_sd,
                        cfg.k_mean + cfg.param_trunc_sds * cfg.k_sd, rng);

        double t_am = sample_tn(cfg.interval_mean, cfg.interval_sd,
                                cfg.interval_lo, cfg.interval_hi, rng);
        double t_pm = 24.0 - t_am;

        double x_am = curve_yield(p, t_am);
        double x_pm = curve_yield(p, t_pm);
        if (cfg.noise_sd > 0.0) {
            x_am += cfg.noise_sd * rng.normal();
            x_pm += cfg.noise_sd * rng.normal();
        }
        double daily = x_am + x_pm;

        MilkingRecord am;
        am.cow_id = i;
        am.session = Session::AM;
        am.interval_h = t_am;
        am.partial_kg = x_am;
        am.daily_kg = daily;
        am.dim = cfg.dim_value;
        ds.records.push_back(am);

        MilkingRecord pm = am;
        pm.session = Session::PM;
        pm.interval_h = t_pm;
        pm.partial_kg = x_pm;
        ds.records.push_back(pm);
    }

    ds.provenance = "simulate seed=" + std::to_string(cfg.seed) +
                    " cows=" + std::to_string(cfg.n_cows) +
                    " y720=" + std::to_string(cfg.y720_mean) + "/" + std::to_string(cfg.y720_sd) +
                    " k=" + std::to_string(cfg.k_mean) + "/" + std::to_string(cfg.k_sd) +
                    " interval=" + std::to_string(cfg.interval_mean) + "/" + std::to_string(cfg.interval_sd) +
                    "[" + std::to_string(cfg.interval_lo) + "," + std::to_string(cfg.interval_hi) + "]" +
                    " noise=" + std::to_string(cfg.noise_sd);
    return ds;
}

} // namespace ampm
