from conealign.evaluation import ExperimentConfig, run_experiment
from conealign.figures import render_report_figures


def test_figures_rendered_alongside_report(tmp_path):
    config = ExperimentConfig(
        problem="sp5",
        methods=("2stage", "cave-h"),
        n_train=30,
        n_val=15,
        n_test=30,
        n_seeds=2,
        root_seed=9,
        epochs=3,
    )
    report = run_experiment(config)
    written = render_report_figures(report, tmp_path)
    names = {p.name for p in written}
    assert names == {"regret_summary.png", "val_regret.png"}
    for p in written:
        assert p.stat().st_size > 1000  # a real PNG, not an empty stub


def test_curves_skipped_without_validation(tmp_path):
    config = ExperimentConfig(
        problem="sp5",
        methods=("2stage",),
        n_train=20,
        n_val=0,
        n_test=20,
        n_seeds=1,
        root_seed=2,
        epochs=2,
    )
    report = run_experiment(config)
    written = render_report_figures(report, tmp_path)
    assert {p.name for p in written} == {"regret_summary.png"}
