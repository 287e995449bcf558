import subprocess
import sys
from io import StringIO

from rtcheck.minisolver.frontend import run_text


def solve(script: str) -> str:
    out = StringIO()
    run_text(script, out)
    return out.getvalue()


def verdict(script: str) -> str:
    return solve(script).splitlines()[0]


class TestPropositional:
    def test_simple_sat(self):
        assert verdict(
            "(declare-const a Bool)(assert a)(check-sat)"
        ) == "sat"

    def test_simple_unsat(self):
        assert verdict(
            "(declare-const a Bool)(assert a)(assert (not a))(check-sat)"
        ) == "unsat"

    def test_pigeonhole_two_in_one(self):
        script = """
        (declare-const a Bool)(declare-const b Bool)
        (assert (or a b))(assert (or (not a) (not b)))
        (assert (= a b))
        (check-sat)
        """
        assert verdict(script) == "unsat"

    def test_iff_and_ite(self):
        script = """
        (declare-const a Bool)(declare-const b Bool)(declare-const c Bool)
        (assert (= a (ite c b (not b))))
        (assert (not c))(assert b)
        (check-sat)(get-model)
        """
        out = solve(script)
        assert out.startswith("sat")
        assert "(define-fun |a| () Bool false)" in out


class TestRationals:
    def test_strict_chain_feasible(self):
        script = """
        (declare-const x Real)(declare-const y Real)
        (assert (< x y))(assert (< y 1.0))(assert (> x 0.99))
        (check-sat)
        """
        assert verdict(script) == "sat"

    def test_strict_cycle_infeasible(self):
        script = """
        (declare-const x Real)(declare-const y Real)
        (assert (< x y))(assert (< y x))
        (check-sat)
        """
        assert verdict(script) == "unsat"

    def test_equalities_combine(self):
        script = """
        (declare-const x Real)(declare-const y Real)
        (assert (= (+ x y) 10.0))
        (assert (= (- x y) 4.0))
        (assert (= x 7.0))
        (check-sat)
        """
        assert verdict(script) == "sat"
        bad = script.replace("(check-sat)", "(assert (= y 2.0))(check-sat)")
        assert verdict(bad) == "unsat"

    def test_exact_rationals_no_drift(self):
        script = """
        (declare-const x Real)
        (assert (= (* 3 x) 1.0))
        (assert (< x (/ 34.0 100.0)))
        (assert (> x (/ 33.0 100.0)))
        (check-sat)(get-model)
        """
        out = solve(script)
        assert out.startswith("sat")
        assert "(/ 1.0 3.0)" in out


class TestIntegers:
    def test_bound_tightening(self):
        script = """
        (declare-const x Int)
        (assert (< x 3))(assert (> x 1))
        (check-sat)(get-model)
        """
        out = solve(script)
        assert out.startswith("sat") and "() Int 2" in out

    def test_integrality_cut(self):
        assert verdict(
            "(declare-const x Int)(assert (= (* 2 x) 1))(check-sat)"
        ) == "unsat"

    def test_mixed_int_real(self):
        script = """
        (declare-const n Int)(declare-const r Real)
        (assert (> n 0))(assert (< n 2))
        (assert (= r 2.5))
        (check-sat)(get-model)
        """
        out = solve(script)
        assert out.startswith("sat")
        assert "() Int 1" in out and "(/ 5.0 2.0)" in out


class TestScriptFeatures:
    def test_let_bindings_shared(self):
        script = """
        (declare-const x Real)
        (assert (let ((v (+ x 1.0))) (and (> v 0.0) (< v 2.0))))
        (check-sat)
        """
        assert verdict(script) == "sat"

    def test_arith_ite_lifting(self):
        script = """
        (declare-const c Bool)(declare-const x Real)
        (assert (= x (ite c 1.0 2.0)))
        (assert (> x 1.5))
        (check-sat)(get-model)
        """
        out = solve(script)
        assert out.startswith("sat")
        assert "(define-fun |c| () Bool false)" in out

    def test_get_model_after_unsat_is_an_error_form(self):
        out = solve(
            "(declare-const a Bool)(assert a)(assert (not a))(check-sat)(get-model)"
        )
        assert "unsat" in out and "error" in out

    def test_unsupported_command_reports_error(self):
        out = solve("(push 1)")
        assert out.startswith("(error")


def test_subprocess_pipe_protocol():
    """The solver ships as an executable speaking SMT-LIB over a pipe, the
    same protocol used for external solvers."""
    script = "(declare-const a Bool)(assert (not a))(check-sat)(get-model)\n"
    proc = subprocess.run(
        [sys.executable, "-m", "rtcheck.minisolver"],
        input=script.encode(),
        stdout=subprocess.PIPE,
        timeout=60,
    )
    out = proc.stdout.decode()
    assert out.startswith("sat")
    assert "(define-fun |a| () Bool false)" in out


def test_deterministic_output():
    script = """
    (declare-const x Real)(declare-const y Real)(declare-const p Bool)
    (assert (or p (> x y)))(assert (or (not p) (< x y)))
    (assert (= (+ x y) 1.0))
    (check-sat)(get-model)
    """
    assert solve(script) == solve(script)
