"""
poisoncert/cli/display/rich_formatter.py
Rich terminal output for certificates, attack summaries and settings.
"""

from typing import Iterable, Optional, Sequence

from rich import box
from rich.console import Console, Group
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from poisoncert.cli.report import InstanceRecord, RunReport


class PoisonCertFormatter:
    """Tables and panels shared by every command."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()
        self.colors = {
            'primary': 'cyan',
            'success': 'green',
            'warning': 'yellow',
            'error': 'red',
            'muted': 'bright_black',
        }

    def header(self, title: str, subtitle: str = "") -> None:
        text = Text()
        text.append("🛡️ ", style="bold")
        text.append(title, style=f"bold {self.colors['primary']}")
        if subtitle:
            text.append("\n")
            text.append(subtitle, style=self.colors['muted'])
        self.console.print(Panel(text, border_style=self.colors['primary'], padding=(0, 2)))

    def records_table(self, records: Sequence[InstanceRecord], title: str = "Results") -> Table:
        table = Table(title=title, box=box.ROUNDED, header_style="bold cyan")
        for column in ("kind", "ε", "η", "σ / r", "solver", "verified", "attack", "mean ± stderr", ""):
            table.add_column(column, justify="right" if column not in ("kind", "attack", "") else "left")

        for record in records:
            scale = record.sigma if record.sigma is not None else record.r
            attacks = record.attack_results or [None]
            for i, attack in enumerate(attacks):
                first = i == 0
                table.add_row(
                    record.kind if first else "",
                    f"{record.epsilon:g}" if first else "",
                    f"{record.eta:g}" if first else "",
                    "" if scale is None or not first else f"{scale:g}",
                    _fmt(record.certificate_solver) if first else "",
                    _fmt(record.certificate_verified) if first else "",
                    "-" if attack is None else attack.policy,
                    "-" if attack is None else f"{attack.mean:.5g} ± {attack.stderr:.2g}",
                    "❌" if record.violation and first else ("✅" if first and record.attack_results else ""),
                )
        return table

    def show_report(self, report: RunReport, out_dir=None) -> None:
        self.console.print(self.records_table(report.records, title=f"poisoncert {report.command}"))
        footer = Text()
        footer.append("🔑 config hash ", style="bold")
        footer.append(report.config_hash[:16], style=self.colors['muted'])
        if out_dir is not None:
            footer.append("   📁 ", style="bold")
            footer.append(str(out_dir), style=self.colors['success'])
        self.console.print(footer)
        if report.violations:
            self.console.print(Panel(
                Text(f"{len(report.violations)} record(s) where an attack beat the certificate",
                     style=f"bold {self.colors['error']}"),
                title="[bold red]Dominance violation",
                border_style=self.colors['error'],
            ))

    def show_settings(self, settings, path) -> None:
        blocks = []
        for group, values in settings.to_dict().items():
            text = Text()
            text.append(f"⚙️ {group}\n", style=f"bold {self.colors['primary']}")
            for key, value in values.items():
                text.append(f"  {key}: {value}\n", style="white")
            blocks.append(text)
        self.console.print(Panel(
            Group(*blocks),
            title="[bold white]poisoncert configuration",
            subtitle=str(path),
            border_style=self.colors['primary'],
            padding=(1, 2),
        ))

    def show_lines(self, title: str, lines: Iterable[str], style: str = "primary") -> None:
        self.console.print(Panel(Text("\n".join(lines)), title=f"[bold]{title}", border_style=self.colors[style]))

    def show_error(self, title: str, message: str, exit_code: int) -> None:
        text = Text()
        text.append(message, style="white")
        text.append(f"\n\nexit code {exit_code}", style=self.colors['muted'])
        self.console.print(Panel(text, title=f"[bold red]❌ {title}", border_style=self.colors['error']))


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.6g}"


_formatter = PoisonCertFormatter()


def get_formatter() -> PoisonCertFormatter:
    """Get the global formatter instance."""
    return _formatter


def set_console(console: Console) -> None:
    """Route formatter output to another console."""
    _formatter.console = console
