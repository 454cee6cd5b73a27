// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. `--only 1,5` restricts the run; `--csv` writes the
// outcomes in the property CSV format.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "neumatc/bench.hpp"
#include "neumatc/proptest.hpp"

using namespace neumatc;

namespace {

using Clock = std::chrono::steady_clock;

std::string sci(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

PropertyOutcome outcome(std::string name, double tolerance) {
    PropertyOutcome o;
    o.property.name = std::move(name);
    o.property.tolerance = tolerance;
    return o;
}

/// Wraps a library property with a runtime budget.
PropertyOutcome with_budget(PropertyOutcome o, double budget_seconds) {
    if (o.seconds >= budget_seconds) {
        o.passed = false;
        o.detail += "; over the " + sci(budget_seconds) + " s budget";
    }
    return o;
}

PropertyOutcome criterion_mode3() {
    auto o = run_mode3_oracle(200, 1);
    o.property.name = "1 mode-3 algebra";
    return with_budget(o, 1.0);
}

PropertyOutcome criterion_gradients() {
    auto o = run_gradient_checks(1);
    o.property.name = "2 gradient correctness";
    return with_budget(o, 60.0);
}

PropertyOutcome criterion_recovery() {
    const auto t0 = Clock::now();
    auto o = run_theorem1_oracle();
    o.property.name = "3 exact recovery";
    // The degenerate and underdetermined cases must behave too.
    const auto single = theorem1_recovery(1, 1, 6, 6, 2);
    const auto under = theorem1_recovery(5, 3, 6, 6, 3);
    if (single.max_fit_error >= 1e-8 || single.max_test_error >= 1e-8) {
        o.passed = false;
        o.detail += "; d=1 recovery " + sci(single.max_test_error);
    }
    if (!under.underdetermined) {
        o.passed = false;
        o.detail += "; underdetermined fit not flagged";
    }
    o.seconds = seconds_since(t0);
    return with_budget(o, 10.0);
}

PropertyOutcome criterion_certificate() {
    auto o = run_theorem2_certificate(20, 3, 1000);
    o.property.name = "4 Lipschitz certificate";
    return with_budget(o, 30.0);
}

PropertyOutcome desk_accuracy(const std::string& name, DeskSetup setup, double budget,
                              const std::function<void(const DeskResult&, PropertyOutcome&)>& extra = {}) {
    auto o = outcome(name, 1e-2);
    const auto t0 = Clock::now();
    const auto r = run_desk(std::move(setup));
    o.seconds = seconds_since(t0);
    o.value = r.mean_relerr;
    o.passed = r.mean_relerr < 1e-2;
    o.detail = "mean RelErr " + sci(r.mean_relerr) + " (init " + sci(r.init_mean_relerr) + "), " +
               std::to_string(r.report.history.size()) + " epochs, " +
               std::to_string(r.report.collocation.points.size()) + " collocation points";
    if (extra) extra(r, o);
    return with_budget(o, budget);
}

PropertyOutcome criterion_inversion() { return desk_accuracy("5 sinusoidal inversion n=64", desk_inversion(), 300.0); }

PropertyOutcome criterion_svd() {
    return desk_accuracy("6 sinusoidal svd n=64", desk_svd(), 600.0, [](const DeskResult& r, PropertyOutcome& o) {
        const double orth = std::max(r.max_u_orthogonality, r.max_v_orthogonality);
        o.detail += ", max orthogonality U " + sci(r.max_u_orthogonality) + " V " + sci(r.max_v_orthogonality);
        if (!(orth < 5e-2)) o.passed = false;
    });
}

PropertyOutcome criterion_controlled_rank() {
    auto setup = desk_controlled_rank();
    const auto* src = dynamic_cast<const ControlledRankSource*>(setup.data.source.get());
    std::vector<DenseMatrix> us, ss, vs;
    for (int j = 0; j < 100; ++j) {
        auto f = src->factors((j + 0.5) / 100.0);
        us.push_back(std::move(f.u));
        ss.push_back(DenseMatrix::column(f.s));
        vs.push_back(std::move(f.v));
    }
    double worst = 0.0;
    for (const auto* stack : {&us, &ss, &vs}) {
        const auto sv = stacked_singular_values(*stack);
        if (sv.size() > 5) worst = std::max(worst, sv[5] / sv[0]);
    }
    return desk_accuracy("7 controlled-rank inversion n=64", std::move(setup), 300.0,
                         [worst](const DeskResult&, PropertyOutcome& o) {
                             o.detail += ", stacked factor sigma_6/sigma_1 " + sci(worst);
                             if (!(worst < 1e-8)) o.passed = false;
                         });
}

PropertyOutcome criterion_adr() {
    auto setup = desk_adr();
    const auto* src = dynamic_cast<const AdrSource*>(setup.data.source.get());
    const auto& as = src->assembly();
    const DenseMatrix a0 = as.a0.to_dense(), a1 = as.a1.to_dense(), a2 = as.a2.to_dense();
    double identity = 0.0;
    for (int j = 0; j < 200; ++j) {
        const double p = j / 200.0;
        const double c = std::cos(2.0 * std::numbers::pi * p), s = std::sin(2.0 * std::numbers::pi * p);
        const DenseMatrix built = as.at(p).to_dense();
        for (std::size_t i = 0; i < built.size(); ++i) {
            const double ref = a0.data()[i] + c * a1.data()[i] + s * a2.data()[i];
            identity = std::max(identity, std::abs(built.data()[i] - ref));
        }
    }
    return desk_accuracy("8 ADR linsolve N=1024", std::move(setup), 600.0,
                         [identity](const DeskResult&, PropertyOutcome& o) {
                             o.detail += ", assembly identity max diff " + sci(identity);
                             if (identity != 0.0) o.passed = false;
                         });
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

PropertyOutcome criterion_efficiency() {
    auto o = outcome("9 efficiency direction", 3.0);
    const auto t0 = Clock::now();
    const double reported = 2.9 / 6.3e-2;
    FlopScenario big;
    big.kind = {OpKind::Inverse};
    big.rows = big.cols = 1024;
    const auto fc = flop_model(big);
    const double ratio = fc.baseline("lu_factor") / fc.neumatc;
    const double off = std::max(ratio / reported, reported / ratio);
    o.value = off;
    o.passed = off <= 3.0;
    std::ostringstream detail;
    detail << "n=1024 LU/model flops " << sci(ratio) << " (inversion count " << sci(fc.baseline("lu_inverse") / fc.neumatc)
           << ", reported " << sci(reported) << ")";

    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    for (std::size_t n : {256u, 512u}) {
        ModelInitConfig mc;
        mc.d = {20};
        mc.net.depth = 3;
        mc.net.width = 100;
        mc.seed = 1;
        const auto model = init_model({OpKind::Inverse}, n, n, ParamDomain::unit(1), mc);
        FlopScenario s = big;
        s.rows = s.cols = n;
        const auto counts = flop_model(s);
        const bool flops_ok = model_flops(model) < counts.baseline("lu_factor");

        const std::size_t points = 16;
        std::vector<std::vector<double>> ps;
        for (std::size_t j = 0; j < points; ++j) ps.push_back({(j + 0.5) / points});
        std::vector<DenseMatrix> inputs;
        for (std::size_t j = 0; j < 4; ++j) {
            DenseMatrix a(n, n);
            for (double& x : a.data()) x = nd(rng);
            for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
            inputs.push_back(std::move(a));
        }
        std::vector<double> model_ms, lu_ms;
        for (int rep = 0; rep < 7; ++rep) {
            auto t = Clock::now();
            const auto out = predict_batch(model, ps);
            model_ms.push_back(1e3 * seconds_since(t) / points);
            t = Clock::now();
            double sink = 0.0;
            for (const auto& a : inputs) {
                const LuFactorization lu(a);
                sink += lu.solve(std::vector<double>(n, 1.0))[0];
            }
            lu_ms.push_back(1e3 * seconds_since(t) / static_cast<double>(inputs.size()));
            if (!std::isfinite(sink) || out.empty()) o.passed = false;
        }
        const double tm = median(model_ms), tl = median(lu_ms);
        detail << "; n=" << n << " flops " << sci(model_flops(model)) << " vs LU " << sci(counts.baseline("lu_factor"))
               << ", time/point " << sci(tm) << " ms vs LU " << sci(tl) << " ms";
        if (!flops_ok || !(tm < tl)) o.passed = false;
    }
    o.detail = detail.str();
    o.seconds = seconds_since(t0);
    return with_budget(o, 120.0);
}

PropertyOutcome criterion_ablation() {
    auto o = outcome("10 ablation directions", 0.0);
    const auto t0 = Clock::now();
    AblationConfig cfg;
    cfg.sweep = true;
    const auto rep = run_ablation_directions(cfg);
    o.seconds = seconds_since(t0);
    std::ostringstream d;
    const auto& ad = rep.sampling[0];
    const auto& rd = rep.sampling[1];
    d << "sampling adaptive " << sci(ad.mean) << " vs random " << sci(rd.mean) << (rep.sampling_ok ? " ok" : " REVERSED")
      << " (per seed adaptive/random:";
    for (std::size_t i = 0; i < ad.relerr.size(); ++i) d << ' ' << sci(ad.relerr[i]) << '/' << sci(rd.relerr[i]);
    d << "; max orthogonality:";
    for (std::size_t i = 0; i < ad.orthogonality.size(); ++i)
        d << ' ' << sci(ad.orthogonality[i]) << '/' << sci(rd.orthogonality[i]);
    d << "); activation";
    for (const auto& arm : rep.activation) d << ' ' << arm.name << ' ' << sci(arm.mean);
    d << (rep.activation_ok ? " ok" : " REVERSED");
    double worst_sweep = 0.0;
    std::string worst_name;
    for (const auto& arm : rep.sweep)
        if (arm.mean > worst_sweep) {
            worst_sweep = arm.mean;
            worst_name = arm.name;
        }
    d << "; sweep worst " << worst_name << ' ' << sci(worst_sweep) << (rep.sweep_ok ? " (< 1e-1)" : " (>= 1e-1)");
    o.detail = d.str();
    o.value = ad.mean - rd.mean;
    o.passed = rep.sampling_ok && rep.activation_ok;
    return with_budget(o, 1800.0);
}

PropertyOutcome criterion_gates() {
    auto o = run_baseline_gates(1);
    o.property.name = "11 baseline solver gates";
    return with_budget(o, 60.0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("neumatc acceptance criteria");
    std::string csv;
    std::vector<int> only;
    app.add_option("--csv", csv, "Write outcomes as CSV");
    app.add_option("--only", only, "Criterion numbers to run")->delimiter(',')->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<PropertyOutcome()>> criteria{
        criterion_mode3,          criterion_gradients, criterion_recovery, criterion_certificate,
        criterion_inversion,      criterion_svd,       criterion_controlled_rank, criterion_adr,
        criterion_efficiency,     criterion_ablation,  criterion_gates};

    std::vector<PropertyOutcome> outcomes;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) continue;
        PropertyOutcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = outcome("criterion " + std::to_string(i + 1), 0.0);
            o.detail = std::string("threw: ") + e.what();
        }
        std::cout << (o.passed ? "PASS " : "FAIL ") << o.property.name << " [" << sci(o.seconds) << " s]: " << o.detail
                  << std::endl;
        outcomes.push_back(std::move(o));
    }
    if (!csv.empty()) {
        std::ofstream f(csv);
        write_property_csv(outcomes, f);
    }
    const auto passed = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.passed; });
    std::cout << passed << "/" << outcomes.size() << " criteria passed" << std::endl;
    return passed == static_cast<long>(outcomes.size()) ? 0 : 1;
}
