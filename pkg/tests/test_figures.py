import math

from rbg_hubs.figures import FIG1_LAMBDA, fig1, fig2


def test_fig1_realisation():
    data = fig1(seed=9)
    names = [a.name for a in data.artifacts]
    assert names[0] == "fig1_points.csv"
    assert {"fig1_f1_edges.csv", "fig1_f1_graph.json", "fig1_f2_edges.csv", "fig1_f2_graph.json"} <= set(names)
    points = data.artifacts[0].content
    n_agents = data.summary["n_agents"]
    assert sum(1 for p in points if p["kind"] == "agent") == n_agents
    assert abs(n_agents - FIG1_LAMBDA) < 5 * math.sqrt(FIG1_LAMBDA)
    for name in ("f1", "f2"):
        assert 0 <= data.summary[name]["isolated_agents"] <= n_agents
    headers = {a.name: a.content for a in data.artifacts if a.name.endswith("_graph.json")}
    assert headers["fig1_f1_graph.json"]["conn"] == "boolean:0.1262"
    assert headers["fig1_f2_graph.json"]["conn"] == "exp:0.1262"
    assert all(h["seed"] == 9 and h["n_hubs"] == data.summary["n_hubs"] for h in headers.values())
    # same seed, same picture
    again = fig1(seed=9)
    assert again.summary == data.summary


def test_fig2_curves_follow_theory():
    data = fig2(seed=4, reps=200, p_grid=[1.0, 0.25])
    rows = data.artifacts[0].content
    assert len(rows) == 4
    for row in rows:
        assert row["reps"] == 200
        assert abs(row["EN_sim"] - row["EN_theory"]) <= 4 * row["sdN_theory"] / math.sqrt(200)
        assert row["EN_sim"] >= row["EM_sim"]
    by_key = {(r["lambda"], r["p"]): r for r in rows}
    for lam in (5.0, 50.0):
        # dispersion keeps N's mean and raises M
        assert math.isclose(by_key[(lam, 0.25)]["EN_theory"], by_key[(lam, 1.0)]["EN_theory"], rel_tol=1e-12)
        assert by_key[(lam, 0.25)]["EM_theory"] > by_key[(lam, 1.0)]["EM_theory"]
