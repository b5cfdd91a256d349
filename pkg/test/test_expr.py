#!/usr/bin/env python3
"""
测试表达式语言：解析、求值、打印与错误位置
"""

import numpy as np
import pytest

from core.errors import ExprEvaluationError, ExprSyntaxError
from expr import (
    BinaryOp,
    Call,
    Constant,
    MatrixExpr,
    Negate,
    Number,
    Variable,
    depends_on,
    eval_expr,
    evaluate_array,
    parse_expr,
)

GRAPHENE_ENTRY = "exp(-2*pi*i*k1)*(1+exp(2*pi*i*k2))+1"


def test_parse_product():
    """k1*k2 解析为两个变量的乘积"""
    e = parse_expr("k1*k2", 2)
    assert isinstance(e.root, BinaryOp)
    assert e.root.op == "*"
    assert e.root.left == Variable(1)
    assert e.root.right == Variable(2)
    assert e.variables == frozenset({1, 2})


def test_depends_on():
    assert depends_on(parse_expr("k2/ln(1+2*k2)", 2)) == frozenset({2})
    assert depends_on(parse_expr("0.9353147842283", 2)) == frozenset()
    # 0*k1 仍算作依赖 k1
    assert depends_on(parse_expr("0*k1+k3", 3)) == frozenset({1, 3})


def test_parse_graphene_entry():
    """石墨烯跳跃矩阵元素可以解析，k=(0,0) 处取值为 3"""
    e = parse_expr(GRAPHENE_ENTRY, 2)
    assert eval_expr(e, (0.0, 0.0)) == pytest.approx(3.0, abs=1e-15)
    print("✅ 石墨烯元素在原点取值 3")


def test_eval_examples():
    assert eval_expr(parse_expr("k1*k2", 2), (0.5, 0.5)) == pytest.approx(0.25)
    value = eval_expr(parse_expr("k2/ln(1+2*k2)", 2), (0.3, 1.0))
    assert value.real == pytest.approx(1.0 / np.log(3.0), abs=1e-15)
    assert value.real == pytest.approx(0.910239, abs=1e-6)


def test_precedence_and_associativity():
    """^ > 一元负号 > * / > + -，^ 右结合"""
    cases = [
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("(2^3)^2", 64.0),
        ("8/4/2", 1.0),
        ("1-2-3", -4.0),
        ("2*3+4", 10.0),
        ("2+3*4", 14.0),
        ("-(1+2)*3", -9.0),
        ("2^-1", 0.5),
        ("1.5e1+2E-1", 15.2),
    ]
    for text, expected in cases:
        value = eval_expr(parse_expr(text, 1), (0.0,))
        assert value == pytest.approx(expected), f"{text} 期望 {expected}，实际 {value}"


def test_variable_out_of_range():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("k3", 2)
    assert info.value.position == 0


def test_unknown_identifier():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("1+foo(k1)", 1)
    assert info.value.position == 2


def test_non_integer_exponent_rejected():
    with pytest.raises(ExprSyntaxError):
        parse_expr("k1^0.5", 1)
    with pytest.raises(ExprSyntaxError):
        parse_expr("2^k1", 1)


def test_error_position_of_inserted_token():
    """在位置 p 插入非法记号，报告的位置恰为 p"""
    base = "k1*k2+cos(k1)"
    for p in [0, 3, 6, len(base)]:
        text = base[:p] + ")" + base[p:]
        with pytest.raises(ExprSyntaxError) as info:
            parse_expr(text, 2)
        assert info.value.position == p, f"插入位置 {p}，报告 {info.value.position}"


def test_empty_and_incomplete():
    with pytest.raises(ExprSyntaxError):
        parse_expr("   ", 1)
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("1+", 1)
    assert info.value.position == 2


def test_evaluation_errors_carry_span():
    e = parse_expr("1/(k1-0.5)", 1)
    with pytest.raises(ExprEvaluationError) as info:
        eval_expr(e, (0.5,))
    assert info.value.span[0] == 0

    e = parse_expr("ln(k1)", 1)
    with pytest.raises(ExprEvaluationError):
        eval_expr(e, (0.0,))
    # ln 在 (0,1] 上正常
    assert eval_expr(e, (1.0,)) == pytest.approx(0.0)


def test_eval_rejects_points_outside_unit_cube():
    e = parse_expr("k1", 1)
    with pytest.raises(ValueError):
        eval_expr(e, (1.5,))


def test_round_trip_is_fixed_point():
    """打印 ∘ 解析 ∘ 打印 为不动点"""
    corpus = [
        "k1*k2",
        GRAPHENE_ENTRY,
        "k2/ln(1+2*k2)",
        "-2^2",
        "(-2)^2",
        "2^3^2",
        "(2^3)^2",
        "1-(2-k1)",
        "k1/(k2*k1)",
        "-(k1+k2)",
        "conj(exp(i*k1))",
        "sqrt(k1)*sin(pi*k2)-cos(k1)^3",
        "1.5e-3*k1",
    ]
    for text in corpus:
        once = parse_expr(text, 2).to_source()
        twice = parse_expr(once, 2).to_source()
        assert once == twice, f"{text}: {once} != {twice}"
        point = np.array([[0.3, 0.7]])
        assert evaluate_array(parse_expr(once, 2), point) == pytest.approx(
            evaluate_array(parse_expr(text, 2), point), rel=1e-15)


def test_hand_built_ast_agrees():
    """解析结果与手工构建的语法树求值一致"""
    k1, k2 = Variable(1), Variable(2)
    two_pi_i = BinaryOp("*", BinaryOp("*", Number(2.0), Constant("pi")), Constant("i"))
    cases = [
        ("k1+k2", BinaryOp("+", k1, k2)),
        ("k1-k2", BinaryOp("-", k1, k2)),
        ("k1*k2", BinaryOp("*", k1, k2)),
        ("k1/(1+k2)", BinaryOp("/", k1, BinaryOp("+", Number(1.0), k2))),
        ("-k1", Negate(k1)),
        ("k1^3", BinaryOp("^", k1, Number(3.0))),
        ("exp(2*pi*i*k1)", Call("exp", BinaryOp("*", two_pi_i, k1))),
        ("sin(k1)*cos(k2)", BinaryOp("*", Call("sin", k1), Call("cos", k2))),
        ("ln(1+k1)", Call("ln", BinaryOp("+", Number(1.0), k1))),
        ("sqrt(k2)", Call("sqrt", k2)),
        ("conj(i*k1)", Call("conj", BinaryOp("*", Constant("i"), k1))),
        ("pi", Constant("pi")),
        ("2.5", Number(2.5)),
        ("k1^-2", BinaryOp("^", k1, Negate(Number(2.0)))),
        ("(k1+k2)^2", BinaryOp("^", BinaryOp("+", k1, k2), Number(2.0))),
        ("k2-k1*k2", BinaryOp("-", k2, BinaryOp("*", k1, k2))),
        ("-(k1-k2)", Negate(BinaryOp("-", k1, k2))),
        ("1/k1/k2", BinaryOp("/", BinaryOp("/", Number(1.0), k1), k2)),
        ("exp(-k1)", Call("exp", Negate(k1))),
        ("cos(pi*k2)^2", BinaryOp("^", Call("cos", BinaryOp("*", Constant("pi"), k2)), Number(2.0))),
    ]
    rng = np.random.default_rng(0)
    points = rng.uniform(0.05, 1.0, size=(8, 2))
    for text, root in cases:
        parsed = evaluate_array(parse_expr(text, 2), points)
        built = evaluate_array(MatrixExpr(root, 2), points)
        np.testing.assert_allclose(parsed, built, rtol=1e-15, atol=0.0, err_msg=text)


def test_constant_folding_consistent():
    e = parse_expr("2*pi*k1 + exp(i*pi)", 1)
    value = eval_expr(e, (0.25,))
    assert value == pytest.approx(0.5 * np.pi - 1.0, abs=1e-15)
    assert parse_expr("exp(i*pi)", 1).is_constant()


def test_vectorized_shape():
    e = parse_expr("k1+2*k2", 2)
    coords = np.zeros((3, 4, 2))
    assert evaluate_array(e, coords).shape == (3, 4)
    constant = parse_expr("7", 2)
    assert evaluate_array(constant, coords).shape == (3, 4)
