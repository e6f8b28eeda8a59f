// vpstab: energy-Casimir stability toolkit for spherical Vlasov-Poisson
// steady states. Subcommands: steady, rearrange, energy, jacobian, hessian,
// evolve, verify.

#include <CLI11.hpp>

#include <iostream>

#include "vpstab/io.hpp"
#include "vpstab/linearized.hpp"
#include "vpstab/verify.hpp"

using namespace vpstab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitPrecision = 2;

struct ModelOptions {
    std::string kind = "king";
    double e0 = -0.5;
    double q = 1.0;
    double kappa = 0.0;
    double ra = 1.0;
    std::string table;
    long nodes = 301;
    std::string configPath;
};

void addModelFlags(CLI::App* cmd, ModelOptions& opt) {
    cmd->add_option("--model", opt.kind, "king|michie-king|polytrope|osipkov-merritt|tabulated");
    cmd->add_option("--e0", opt.e0, "cutoff energy (negative)");
    cmd->add_option("--q", opt.q, "polytrope exponent");
    cmd->add_option("--kappa", opt.kappa, "angular momentum exponent");
    cmd->add_option("--ra", opt.ra, "anisotropy radius");
    cmd->add_option("--table", opt.table, "CSV of (e, ell, F) rows for tabulated models");
    cmd->add_option("--nodes", opt.nodes, "radial grid nodes");
    cmd->add_option("--config", opt.configPath, "key=value config file (flags override)");
}

RunConfig assembleConfig(const ModelOptions& opt) {
    RunConfig cfg;
    if (!opt.configPath.empty()) cfg = RunConfig::fromFile(opt.configPath);
    auto setIf = [&](const std::string& key, const std::string& value) {
        cfg.setOverride(key, value);
    };
    char buf[64];
    setIf("model.kind", opt.kind);
    std::snprintf(buf, sizeof buf, "%.17g", opt.e0);
    setIf("model.e0", buf);
    std::snprintf(buf, sizeof buf, "%.17g", opt.q);
    setIf("model.q", buf);
    std::snprintf(buf, sizeof buf, "%.17g", opt.kappa);
    setIf("model.kappa", buf);
    std::snprintf(buf, sizeof buf, "%.17g", opt.ra);
    setIf("model.ra", buf);
    if (!opt.table.empty()) setIf("model.table", opt.table);
    std::snprintf(buf, sizeof buf, "%ld", opt.nodes);
    setIf("grid.nodes", buf);
    return cfg;
}

SteadyStateModel modelFrom(const RunConfig& cfg) {
    std::string kind = cfg.get("model.kind", "king");
    double e0 = cfg.getDouble("model.e0", -0.5);
    if (kind == "king") return SteadyStateModel::king(e0);
    if (kind == "michie-king")
        return SteadyStateModel::michieKing(e0, cfg.getDouble("model.ra", 1.0));
    if (kind == "polytrope")
        return SteadyStateModel::polytrope(e0, cfg.getDouble("model.q", 1.0),
                                           cfg.getDouble("model.kappa", 0.0));
    if (kind == "osipkov-merritt")
        return SteadyStateModel::osipkovMerritt(e0, cfg.getDouble("model.ra", 1.0));
    if (kind == "tabulated")
        return SteadyStateModel::tabulatedFromCsv(cfg.get("model.table"), e0);
    throw std::domain_error("unknown model kind: " + kind);
}

SteadyStateSolution solveFrom(const RunConfig& cfg) {
    SteadyStateModel model = modelFrom(cfg);
    std::size_t nodes = std::size_t(cfg.getLong("grid.nodes", 301));
    return solveSteadyState(model, fitGrid(model, nodes));
}

void guardFinite(const Json& report) {
    if (!report.allFinite()) throw PrecisionError("report contains non-finite values", 0.0);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-Casimir stability toolkit for spherical Vlasov-Poisson systems"};
    app.require_subcommand(1);

    // steady
    auto* steady = app.add_subcommand("steady", "solve the self-consistent state");
    ModelOptions steadyOpt;
    std::string steadyOut = "phi.csv";
    addModelFlags(steady, steadyOpt);
    steady->add_option("--out", steadyOut, "CSV output (r, phi, dphi, rho)");

    // rearrange
    auto* rearr = app.add_subcommand("rearrange", "rearrangement with the state's own field");
    std::string rearrIn, rearrOut = "rearranged.vpdf";
    rearr->add_option("--snapshot", rearrIn, "VPDF input")->required();
    rearr->add_option("--out", rearrOut, "VPDF output");

    // energy
    auto* energy = app.add_subcommand("energy", "energy and monotonicity report");
    std::string energyIn, energyReport = "energy.json";
    energy->add_option("--snapshot", energyIn, "VPDF input")->required();
    energy->add_option("--report", energyReport, "JSON output");

    // jacobian
    auto* jac = app.add_subcommand("jacobian", "phase area and derivative at (e, ell)");
    ModelOptions jacOpt;
    double jacE = -0.25, jacEll = 0.01;
    addModelFlags(jac, jacOpt);
    jac->add_option("--e", jacE, "energy")->required();
    jac->add_option("--ell", jacEll, "angular momentum squared")->required();

    // hessian
    auto* hess = app.add_subcommand("hessian", "reduced-functional Hessian spectrum");
    ModelOptions hessOpt;
    long hessBasis = 20;
    std::string hessReport = "hess.json";
    addModelFlags(hess, hessOpt);
    hess->add_option("--basis", hessBasis, "orthonormal basis size");
    hess->add_option("--report", hessReport, "JSON output");

    // evolve
    auto* evolve = app.add_subcommand("evolve", "particle experiment around the state");
    ModelOptions evOpt;
    long evParticles = 100000, evSteps = 1000, evDiag = 100;
    double evDt = 1e-3, evSqueeze = 0.0;
    std::string evSeries = "series.csv", evSnapshot;
    long evSeed = 1;
    addModelFlags(evolve, evOpt);
    evolve->add_option("--particles", evParticles, "ensemble size");
    evolve->add_option("--steps", evSteps, "number of steps");
    evolve->add_option("--dt", evDt, "time step in dynamical times");
    evolve->add_option("--diag-every", evDiag, "diagnostic cadence");
    evolve->add_option("--squeeze", evSqueeze, "initial radial squeeze fraction");
    evolve->add_option("--seed", evSeed, "sampling seed");
    evolve->add_option("--out", evSeries, "time series CSV");
    evolve->add_option("--final-snapshot", evSnapshot, "VPDF of the sampled initial state");

    // verify
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    std::string suite = "primary";
    verify->add_option("--suite", suite, "suite name (primary)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (steady->parsed()) {
            RunConfig cfg = assembleConfig(steadyOpt);
            SteadyStateSolution sol = solveFrom(cfg);
            writePotentialCsv(steadyOut, sol.phiQ, sol.rhoQ);
            std::cout << "mass " << sol.mass << " support " << sol.supportRadius << " virial "
                      << sol.virialRatio << "\n";
            return kExitOk;
        }
        if (rearr->parsed()) {
            PhaseDF df = readSnapshot(rearrIn);
            ShellDistribution shells = ShellDistribution::fromCells(df);
            ShellPotential pot(shells);
            PhaseDF hat = rearrangeWithPotential(schwarzProfile(df), pot, df);
            writeSnapshot(rearrOut, hat);
            return kExitOk;
        }
        if (energy->parsed()) {
            PhaseDF df = readSnapshot(energyIn);
            EnergyReport er = hamiltonian(df);
            MonotonicityReport mono = monotonicityReport(df);
            Json rep = Json::object();
            rep.set("mass", Json::number(er.mass));
            rep.set("kinetic", Json::number(er.kinetic));
            rep.set("field", Json::number(er.fieldEnergy));
            rep.set("hamiltonian", Json::number(er.hamiltonian));
            rep.set("gap1", Json::number(mono.gap1));
            rep.set("gap2", Json::number(mono.gap2));
            Json cas = Json::array();
            for (const auto& [label, value] : er.casimirs) {
                Json c = Json::object();
                c.set("label", Json::text(label));
                c.set("value", Json::number(value));
                cas.push(std::move(c));
            }
            rep.set("casimirs", std::move(cas));
            rep.set("config", Json::object().set("snapshot", Json::text(energyIn)));
            guardFinite(rep);
            writeTextFile(energyReport, rep.dump(2));
            return kExitOk;
        }
        if (jac->parsed()) {
            RunConfig cfg = assembleConfig(jacOpt);
            SteadyStateSolution sol = solveFrom(cfg);
            const JacobianEvaluator& evaluator = sol.jacobian();
            double a = evaluator.value(jacE, jacEll);
            double da = evaluator.derivE(jacE, jacEll);
            std::printf("%.17g %.17g\n", a, da);
            return kExitOk;
        }
        if (hess->parsed()) {
            RunConfig cfg = assembleConfig(hessOpt);
            SteadyStateSolution sol = solveFrom(cfg);
            LinearizedAnalysis lin(sol);
            RadialBasis basis(1.6 * sol.supportRadius, int(hessBasis),
                              2.0 * sol.supportRadius, 3.2 * sol.supportRadius);
            CoercivityReport scan = lin.coercivityScan(basis);
            Json rep = Json::object();
            rep.set("n", Json::integer(scan.n));
            Json matrix = Json::array();
            for (int i = 0; i < scan.n; ++i) {
                Json row = Json::array();
                for (int j = 0; j < scan.n; ++j) row.push(Json::number(scan.hessian(i, j)));
                matrix.push(std::move(row));
            }
            rep.set("matrix", std::move(matrix));
            Json ev = Json::array();
            for (double v : scan.eigenvalues) ev.push(Json::number(v));
            rep.set("eigenvalues", std::move(ev));
            rep.set("min_eig", Json::number(scan.minEigenvalue));
            rep.set("config", cfg.echo());
            guardFinite(rep);
            writeTextFile(hessReport, rep.dump(2));
            return kExitOk;
        }
        if (evolve->parsed()) {
            RunConfig cfg = assembleConfig(evOpt);
            SteadyStateSolution sol = solveFrom(cfg);
            PhaseGridSpec spec;
            spec.nr = 128;
            spec.nu = 128;
            spec.nEll = 16;
            spec.rMax = sol.supportRadius * 1.02;
            spec.uMax = std::sqrt(2.0 * (sol.model.e0 - sol.phiQ.phiAtZero())) * 1.02;
            spec.ellMax = sol.ellMax;
            PhaseDF q = makePhaseGrid(spec);
            fillPhaseDF(q, [&](double r, double u, double ell) { return sol.Q(r, u, ell); });
            ParticleEnsemble ens = sampleParticles(q, std::size_t(evParticles),
                                                   std::uint64_t(evSeed));
            if (evSqueeze != 0.0)
                for (auto& r : ens.r) r *= 1.0 - evSqueeze;
            if (!evSnapshot.empty()) writeSnapshot(evSnapshot, q);
            SimConfig sim;
            double tDyn = dynamicalTime(sol);
            sim.dt = evDt * tDyn;
            sim.steps = evSteps;
            sim.diagEvery = int(evDiag);
            sim.seed = std::uint64_t(evSeed);
            ExperimentResult res = runExperiment(ens, sol, sim);
            writeTimeSeriesCsv(evSeries, res.rows);
            std::cout << "dynamical time " << res.dynamicalTime << ", rows "
                      << res.rows.size() << "\n";
            return kExitOk;
        }
        if (verify->parsed()) {
            if (suite != "primary") throw std::domain_error("unknown suite: " + suite);
            std::vector<CriterionResult> results = runAcceptanceSuite(std::cout);
            bool all = true;
            for (const auto& r : results) all = all && r.pass;
            std::cout << (all ? "suite PASS" : "suite FAIL") << "\n";
            return all ? kExitOk : kExitPrecision;
        }
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return kExitPrecision;
    } catch (const PrecisionError& e) {
        std::cerr << "precision error: " << e.what() << "\n";
        return kExitPrecision;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecision;
    }
    return kExitOk;
}
