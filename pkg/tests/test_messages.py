"""
输出格式化与错误处理测试
"""
import io
import logging

import pytest

from handlers.error_handler import EXIT_CAPABILITY, EXIT_FAILURE, EXIT_TASK_DEFINITION, EXIT_USAGE, exit_code_for, handle_cli_error
from models.errors import (
    CapabilityError,
    ConfigurationError,
    ContractViolation,
    InfeasibleTaskError,
    ReplayMismatchError,
    TaskDefinitionError,
)
from ui.messages import ReportFormatter, emit, write_text


class TestReportFormatter:
    """结果格式化器测试"""

    @pytest.mark.unit
    def test_csv_table(self):
        text = ReportFormatter.csv_table([{"a": 1, "b": 0.5}, {"a": 2}], ["a", "b"])
        assert text == "a,b\n1,0.5\n2,\n"

    @pytest.mark.unit
    def test_csv_table_infinity(self):
        text = ReportFormatter.csv_table([{"x": float("-inf")}, {"x": float("inf")}], ["x"])
        assert text.splitlines() == ["x", "-inf", "inf"]

    @pytest.mark.unit
    def test_csv_ignores_extra_keys(self):
        assert ReportFormatter.csv_table([{"a": 1, "z": 9}], ["a"]) == "a\n1\n"

    @pytest.mark.unit
    def test_json_record_is_stable(self):
        text = ReportFormatter.json_record({"b": 1, "a": "对称"})
        assert text == '{\n  "a": "对称",\n  "b": 1\n}\n'

    @pytest.mark.unit
    def test_emit_and_write_text(self, temp_dir):
        stream = io.StringIO()
        emit("hello\n", stream)
        assert stream.getvalue() == "hello\n"
        path = write_text(f"{temp_dir}/a/b.csv", "x\n")
        assert path.read_text(encoding="utf-8") == "x\n"


class TestErrorHandler:
    """退出码映射测试"""

    @pytest.mark.unit
    @pytest.mark.parametrize("error, code", [
        (ConfigurationError("bad"), EXIT_USAGE),
        (ContractViolation("bad"), EXIT_USAGE),
        (CapabilityError("big"), EXIT_CAPABILITY),
        (InfeasibleTaskError("none"), EXIT_CAPABILITY),
        (TaskDefinitionError("raised"), EXIT_TASK_DEFINITION),
        (ReplayMismatchError("diff"), EXIT_FAILURE),
        (RuntimeError("other"), EXIT_FAILURE),
    ])
    def test_exit_code_for(self, error, code):
        assert exit_code_for(error) == code

    @pytest.mark.unit
    def test_handle_cli_error_logs_one_line(self, caplog):
        with caplog.at_level(logging.ERROR, logger="handlers.error_handler"):
            code = handle_cli_error(CapabilityError("k=9 超过穷举上限"), "analyze-symmetry")
        assert code == EXIT_CAPABILITY
        assert "CapabilityError" in caplog.text
        assert "analyze-symmetry" in caplog.text
