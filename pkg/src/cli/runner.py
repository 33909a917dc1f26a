"""
Analysis runner: wires the modules for one configured analysis and writes its reports.

Every analysis returns a results document that ends up in ``summary.json``
next to its CSV tables; SVG plots are added when the output section asks
for them. Nothing time- or host-dependent enters the reports.
"""

import logging
import math
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from src.config import Analysis, RunConfig
from src.output import OutputManager, PlotSeries, emit_plot
from src.utils.errors import ValidationError, ErrorContext

logger = logging.getLogger(__name__)

COUNTING_GRID_POINTS = 401
STRETCHED_ALPHAS = (0.25, 0.5, 0.75)
DEFAULT_MASSES = (1.0, 2.0, 4.0)
DOMAIN_ALPHAS = (0.5, 0.75, 0.9, 0.95, 0.99)
DOMAIN_GAMMA = 1.0
DISTAL_RADIUS = 1.0
DISTAL_D_S = 1.0
DISTAL_SCALINGS = (0.25, 0.5, 0.75)
DISTAL_COLLARS = (0.5, 1.0, 2.0, 4.0)
KINEMATIC_SAMPLES = 500


def _status(verdict) -> str:
    return verdict.status.value


def _value(verdict) -> float:
    return verdict.value if verdict.convergent else (math.inf if verdict.divergent else math.nan)


def _decay_record(decay) -> Optional[Dict[str, Any]]:
    if decay is None:
        return None
    return {'kappa': decay.kappa, 'gamma': decay.gamma, 'alpha': decay.alpha, 'class': decay.decay_class.value}


class AnalysisRunner:
    """Runs the analysis a RunConfig names and writes its report files."""

    def __init__(self, config: RunConfig, manager: Optional[OutputManager] = None):
        """
        Args:
            config (RunConfig): A validated run configuration.
            manager (OutputManager, optional): Report writer, default one on config.output.output_dir.
        """
        self.config = config
        self.manager = manager or OutputManager(config.output.output_dir)
        self._analyses: Dict[Analysis, Callable[[], Dict[str, Any]]] = {
            Analysis.TOWER_REPORT: self.tower_report,
            Analysis.QEI_REPORT: self.qei_report,
            Analysis.NEGSTATE_VERIFY: self.negstate_verify,
            Analysis.TESTFN_BUILD: self.testfn_build,
            Analysis.DISTAL_DEMO: self.distal_demo,
        }

    @property
    def plots(self) -> bool:
        return bool(self.config.output.plots)

    def run(self) -> Dict[str, Any]:
        """
        Run the configured analysis and write ``summary.json``.

        Returns:
            Dict[str, Any]: The summary document.

        Raises:
            LabError: Whatever the analysed modules raise; no summary is written then.
        """
        analysis = self.config.analysis
        logger.info(f"Running {analysis.value} (seed={self.config.seed})")
        results = self._analyses[analysis]()

        config = self.config.to_dict()
        # output locations must not change the report bytes
        config.pop('output')
        config.pop('log')
        summary = {
            'analysis': analysis.value,
            'seed': self.config.seed,
            'config': config,
            'results': results,
            'files': sorted(p.name for p in self.manager.written) + ['summary.json'],
        }
        self.manager.save_json("summary", summary)
        logger.info(f"{analysis.value} finished: {len(self.manager.written)} file(s) in {self.manager.output_dir}")
        return summary

    def _plot(self, name: str, series: Sequence[PlotSeries], xlabel: str, ylabel: str, **kwargs) -> None:
        if self.plots:
            path = emit_plot(series, self.manager.path(name, "svg"), xlabel, ylabel, **kwargs)
            self.manager.written.append(path)

    # ------------------------------------------------------------------
    # tower-report

    def _betas(self, tower) -> np.ndarray:
        from src.tower.criteria import probe_grid
        grid = self.config.grids.beta
        return np.sort(np.asarray(grid, dtype=float)) if grid is not None else probe_grid(tower)

    def _radius(self, tower) -> float:
        R = self.config.constants.R
        return 2.0 / tower.m1 if R is None else R

    def tower_report(self) -> Dict[str, Any]:
        from src.tower.criteria import (classify_nuclearity, counting_integral_identity_check,
                                        index_bounds_profile, local_normality_verdict)
        from src.tower.series import stretched_sum_test

        tower = self.config.tower.build()
        constants = self.config.constants
        betas = self._betas(tower)
        R = self._radius(tower)

        verdict = classify_nuclearity(tower, R=R, C_const=constants.C, betas=betas)
        self.manager.save_table(
            "tower_sums", ["beta", "F_status", "F", "F_remainder", "G_status", "G", "G_remainder"],
            [[row.beta, _status(row.F), _value(row.F), row.F.remainder_bound,
              _status(row.G), _value(row.G), row.G.remainder_bound] for row in verdict.probes],
        )

        identities = [counting_integral_identity_check(tower, float(b)) for b in betas]
        self.manager.save_table(
            "counting_identity", ["beta", "G_status", "G", "integral", "tail_bound", "residual", "approximate"],
            [[c.beta, c.status.value, _value(c.series), c.integral, c.tail_bound, c.residual, c.approximate]
             for c in identities],
        )

        normality = [local_normality_verdict(tower, float(b), probe_betas=betas) for b in betas]
        self.manager.save_table(
            "local_normality", ["beta", "sufficient", "necessary", "locally_normal"],
            [[n.beta, _status(n.sufficient), _status(n.necessary), n.locally_normal.value] for n in normality],
        )

        bounds = index_bounds_profile(tower, R, betas, constants.c, constants.C, constants.C_lower)
        self.manager.save_table(
            "index_bounds", ["beta", "log_lower", "log_upper_exact", "log_upper_simplified"],
            [[b.beta, b.log_lower, b.log_upper_exact, b.log_upper_simplified] for b in bounds],
        )

        stretched = stretched_sum_test(tower, STRETCHED_ALPHAS, betas)

        u = self._counting_grid(tower)
        counts = tower.counting_array(u)
        self.manager.save_table("counting", ["u", "N"], [[x, n] for x, n in zip(u, counts)])

        self._plot_tower(verdict, u, counts)
        residuals = [c.residual for c in identities if math.isfinite(c.residual)]
        return {
            'tower': tower.describe(),
            'R': R,
            'nuclearity': verdict.to_dict(),
            'sufficient_holds': verdict.sufficient_holds.value,
            'necessary_holds': verdict.necessary_holds.value,
            'locally_normal_all_temperatures': normality[0].all_temperatures.value,
            'stretched_condition': stretched.holds.value,
            'max_identity_residual': max(residuals) if residuals else None,
        }

    def _counting_grid(self, tower) -> np.ndarray:
        if self.config.grids.u is not None:
            return np.asarray(self.config.grids.u, dtype=float)
        upper = 10.0 * tower.m1
        if tower.is_finite and tower.size:
            upper = max(upper, 1.1 * tower.prefix[-1])
        return np.linspace(0.0, upper, COUNTING_GRID_POINTS)

    def _plot_tower(self, verdict, u: np.ndarray, counts: np.ndarray) -> None:
        series = []
        for name in ('F', 'G'):
            rows = [(row.beta, getattr(row, name).value) for row in verdict.probes
                    if getattr(row, name).convergent and getattr(row, name).value > 0]
            if rows:
                x, y = zip(*rows)
                series.append(PlotSeries(name, x, y))
        if series:
            self._plot("tower_sums", series, "beta [1/mass]", "sum [dimensionless]",
                       title="Nuclearity sums", logy=True)
        self._plot("counting", [PlotSeries("N(u)", u, counts, kind="step")],
                   "u [mass]", "N(u) [count]", title="Counting function")

    # ------------------------------------------------------------------
    # qei-report

    def _envelope(self, f):
        from src.testfn.envelope import kappa_envelope
        return kappa_envelope(f, m0=self.config.profile.m0)

    def _user_decay(self):
        """Decay fit of the configured transform samples, None when there are none."""
        from src.testfn.envelope import classify_decay
        samples = self.config.test_function.decay_samples
        return classify_decay(samples['u'], samples['values']) if samples else None

    def qei_report(self) -> Dict[str, Any]:
        from src.qei.bounds import single_field_bound, tower_bound
        from src.qei.theorems import (DEFAULT_LAMBDA_GRID, qei_mass_sum_test, qei_to_nuclearity_pipeline,
                                      tower_state_lower_bound)
        from src.negstate.kernel import default_gamma

        tower = self.config.tower.build()
        constants = self.config.constants
        f = self.config.test_function.build()
        envelope = self._envelope(f)
        lambda_grid = self.config.grids.lam or list(DEFAULT_LAMBDA_GRID)
        betas = self._betas(tower)

        single = single_field_bound(f.transform, tower.m1, d=constants.d, C=constants.C)
        bound = tower_bound(f.transform, tower, d=constants.d, C=constants.C)
        u_samples, integrand = bound.integrand_samples
        self.manager.save_table("qei_integrand", ["u", "integrand"],
                                [[x, y] for x, y in zip(u_samples, integrand)])

        sums = qei_mass_sum_test(envelope, tower, lambda_grid)
        self.manager.save_table(
            "qei_mass_sums", ["lambda", "status", "value", "remainder_bound"],
            [[lam, _status(v), _value(v), v.remainder_bound] for lam, v in sums.items()],
        )

        gamma = default_gamma()
        pipeline = qei_to_nuclearity_pipeline(f, tower, envelope=envelope, gamma=gamma,
                                              betas=betas, lambda_grid=lambda_grid, d=constants.d,
                                              C=constants.C, R=constants.R, C_const=constants.C)
        if pipeline.scaling is not None:
            self.manager.save_table("qei_scaling", ["lambda", "Q"],
                                    [[lam, q] for lam, q in zip(pipeline.scaling.lambda_grid,
                                                                pipeline.scaling.q_values)])

        decay = self._user_decay()

        results: Dict[str, Any] = {
            'tower': tower.describe(),
            'single_field': single.to_dict(),
            'tower_bound': bound.to_dict(),
            'mass_sums': [{'lambda': lam, **v.to_dict()} for lam, v in sums.items()],
            'envelope': {'kappa': envelope.kappa, 'beta0': envelope.beta0, 'm0': envelope.m0},
            'decay': _decay_record(decay),
            'pipeline': pipeline.to_dict(),
            'Gamma': gamma,
        }
        exponents = pipeline.verdict.exponents
        if exponents:
            results.update(self._domain(exponents, decay))
        if tower.m1 > envelope.m0:
            results['tower_state_bound'] = tower_state_lower_bound(tower, envelope, gamma).to_dict()

        finite = np.isfinite(integrand)
        if finite.any():
            self._plot("qei_integrand", [PlotSeries("u^d N(u) |f_hat(u)|^2", u_samples[finite], integrand[finite])],
                       "u [mass]", "integrand [mass^d]", title="Tower QEI integrand")
        return results

    def _domain(self, exponents: Dict[str, float], decay) -> Dict[str, Any]:
        """Admissible transform decays for the exponent n the pipeline produced."""
        from src.qei.theorems import nuclearity_to_qei_domain

        n, beta0, A = exponents['n'], exponents['beta0'], self.config.constants.A
        sweep = [(alpha, nuclearity_to_qei_domain(n, DOMAIN_GAMMA, alpha, beta0=beta0, A=A))
                 for alpha in DOMAIN_ALPHAS]
        self.manager.save_table(
            "qei_domain", ["alpha", "gamma", "admissible", "alpha_threshold"],
            [[alpha, DOMAIN_GAMMA, v.admissible, v.alpha_threshold] for alpha, v in sweep],
        )
        record: Dict[str, Any] = {'domain_sweep': [{'alpha': alpha, **v.to_dict()} for alpha, v in sweep]}
        if decay is not None:
            if decay.gamma > 0:
                record['domain'] = nuclearity_to_qei_domain(n, decay.gamma, decay.alpha,
                                                            beta0=beta0, A=A).to_dict()
            else:
                record['domain'] = {'admissible': False, 'reason': "fitted transform does not decay"}
        return record

    # ------------------------------------------------------------------
    # negstate-verify

    def negstate_verify(self) -> Dict[str, Any]:
        from src.negstate.energy import kinematic_sweep, verify_theorem
        from src.negstate.kernel import derive_kernel

        f = self.config.test_function.build()
        envelope = self._envelope(f)
        profile = self.config.profile.build()
        kernel = derive_kernel(profile)
        masses = self.config.grids.m or list(DEFAULT_MASSES)
        mc = self.config.monte_carlo

        kinematics = {}
        for i, m in enumerate(masses):
            report = kinematic_sweep(m, KINEMATIC_SAMPLES, seed=self.config.seed + i)
            kinematics[str(m)] = {'ok': report.ok, 'violations': report.violations, 'extremes': report.extremes}

        report = verify_theorem(masses, f, profile, envelope, kernel=kernel, mc_samples=mc.samples,
                                seed=self.config.seed, mc_batch=mc.batch_size)
        columns = ["m", "lambda0", "Gamma", "energy", "error", "bound", "margin", "mc_estimate", "mc_stderr"]
        rows = [row.to_dict() for row in report.rows]
        self.manager.save_table("negstate", columns, [[row[c] for c in columns] for row in rows])

        ms = [row.m for row in report.rows]
        self._plot("energy_bound",
                   [PlotSeries("averaged energy", ms, [row.energy for row in report.rows], kind="scatter"),
                    PlotSeries("-Gamma m^4 phi^2", ms, [row.bound for row in report.rows], kind="scatter")],
                   "m [mass]", "energy density [mass^4]", title="Averaged energy against the bound")
        return {
            **report.to_dict(),
            'envelope': {'kappa': envelope.kappa, 'beta0': envelope.beta0, 'm0': envelope.m0},
            'kinematics': kinematics,
            'all_margins_ok': all(row.margin >= 1.0 for row in report.rows),
        }

    # ------------------------------------------------------------------
    # testfn-build

    def testfn_build(self) -> Dict[str, Any]:
        from src.testfn.averaging import sample_table
        from src.testfn.envelope import transform_table, verify_envelope

        f = self.config.test_function.build()
        envelope = self._envelope(f)
        slack = verify_envelope(f, envelope)

        samples = sample_table(f)
        self.manager.save_table("testfn_samples", ["t", "f"], list(zip(samples['t'], samples['f'])))
        u = None if self.config.grids.u is None else np.asarray(self.config.grids.u, dtype=float)
        table = transform_table(f, envelope, u)
        self.manager.save_table("testfn_transform", ["u", "f_hat", "envelope"],
                                list(zip(table['u'], table['f_hat'], table['envelope'])))

        self._plot("testfn_transform",
                   [PlotSeries("f_hat(u)", table['u'], np.abs(table['f_hat'])),
                    PlotSeries("kappa exp(-beta0 u)", table['u'], table['envelope'])],
                   "u [1/time]", "|f_hat| [dimensionless]", title="Transform and envelope", logy=True)
        return {
            'function': repr(f),
            'support_radius': f.support_radius,
            'normalization': f.normalization,
            'envelope': {'kappa': envelope.kappa, 'beta0': envelope.beta0, 'm0': envelope.m0,
                         'truncation': envelope.truncation, 'remainder': envelope.remainder},
            'min_slack': slack,
            'decay': _decay_record(self._user_decay()),
        }

    # ------------------------------------------------------------------
    # distal-demo

    def distal_demo(self) -> Dict[str, Any]:
        from src.distal import Ball, RadialDiffeo, covering_radius, derivative_kappa
        from src.distal import describe_band, scaling_bound, shrink_construction

        ball = Ball(DISTAL_RADIUS)
        shrink = shrink_construction(ball, DISTAL_D_S)
        kappa = derivative_kappa(shrink.diffeo, ball, DISTAL_D_S)
        identity = covering_radius(RadialDiffeo.identity(), ball, DISTAL_D_S)
        scalings = [scaling_bound(ball, lam, DISTAL_D_S).to_dict() for lam in DISTAL_SCALINGS]

        d0 = self.config.tower.d0 if self.config.tower.type == "logarithmic" else 1.0
        bands = [describe_band(d0, r) for r in (self.config.grids.u or DISTAL_COLLARS) if r > 0]
        if not bands:
            raise ValidationError("distal band needs a positive collar width",
                                  ErrorContext("cli", "distal_demo", {'u': self.config.grids.u}))
        self.manager.save_table("distal_band", ["r", "lower", "upper", "width"],
                                [[b['r'], b['lower'], b['upper'], b['width']] for b in bands])
        self.manager.save_json("distal_trace", {'shrink': shrink.to_dict(), 'kappa': kappa})
        return {
            'shrink': shrink.to_dict(),
            'kappa': {'map': shrink.diffeo.name, 'collar': DISTAL_D_S, 'value': kappa},
            'identity_covering_radius': identity,
            'scaling': scalings,
            'band': bands[0]['text'],
        }


def run(config: RunConfig, manager: Optional[OutputManager] = None) -> Dict[str, Any]:
    """Run one configured analysis."""
    return AnalysisRunner(config, manager).run()
