"""
Envelope formatter.
Wraps command results and errors into OutputEnvelope and renders envelopes
for humans.
"""

from typing import Any, List, Optional

from loguru import logger
from pydantic import BaseModel

from app.errors import ParseError, ProdCalcError
from app.models import ErrorInfo, OutputEnvelope


class EnvelopeFormatter:
    """Formats command outcomes into output envelopes."""

    def format_success_response(
        self,
        command: str,
        result: Any,
        diagnostics: Optional[List[str]] = None
    ) -> OutputEnvelope:
        """
        Format a successful command.

        Args:
            command: Echo of the command line
            result: Real, ComplexScalar, or any pydantic record
            diagnostics: Optional notes for the caller

        Returns:
            OutputEnvelope with status "ok"
        """
        if isinstance(result, BaseModel):
            result = result.model_dump()
        envelope = OutputEnvelope(
            command=command,
            status="ok",
            result=result,
            diagnostics=diagnostics or []
        )
        logger.debug(f"Formatted success response for {command!r}")
        return envelope

    def format_error_response(self, command: str, error: ProdCalcError) -> OutputEnvelope:
        """
        Format a failed command. No partial result is carried.

        Args:
            command: Echo of the command line
            error: The toolkit error that ended the command

        Returns:
            OutputEnvelope with status "error"
        """
        envelope = OutputEnvelope(
            command=command,
            status="error",
            error=ErrorInfo(
                kind=error.kind,
                message=str(error),
                exit_code=error.exit_code,
                diagnostic=error.diagnostic if isinstance(error, ParseError) else None
            )
        )
        logger.error(f"{command}: {error.kind}: {error}")
        return envelope

    def render_human(self, envelope: OutputEnvelope) -> str:
        """Plain-text rendering; reals and complex values get 6 significant digits."""
        if envelope.error is not None:
            lines = [f"error [{envelope.error.kind}]: {envelope.error.message}"]
            if envelope.error.diagnostic is not None:
                lines.append(f"  at offset {envelope.error.diagnostic.offset}")
        else:
            lines = self._render_value(envelope.result, indent="")
        lines.extend(f"note: {note}" for note in envelope.diagnostics)
        return "\n".join(lines)

    def _render_value(self, value: Any, indent: str) -> List[str]:
        if isinstance(value, dict):
            if set(value) == {"re", "im"}:
                return [indent + self.format_complex(value["re"], value["im"])]
            lines = []
            for key, item in value.items():
                rendered = self._render_value(item, indent + "  ")
                if len(rendered) == 1 and not isinstance(item, (dict, list)):
                    lines.append(f"{indent}{key}: {rendered[0].strip()}")
                else:
                    lines.append(f"{indent}{key}:")
                    lines.extend(rendered)
            return lines
        if isinstance(value, list):
            if all(isinstance(item, (int, float)) for item in value):
                return [indent + "[" + ", ".join(self.format_real(item) for item in value) + "]"]
            lines = []
            for item in value:
                lines.extend(self._render_value(item, indent + "  "))
            return lines
        if isinstance(value, float):
            return [indent + self.format_real(value)]
        return [f"{indent}{value}"]

    @staticmethod
    def format_real(value: float) -> str:
        return f"{value:.6g}"

    @staticmethod
    def format_complex(re: float, im: float) -> str:
        sign = "-" if im < 0 else "+"
        return f"{re:.6g}{sign}{abs(im):.6g}i"


# Global instance
formatter = EnvelopeFormatter()
