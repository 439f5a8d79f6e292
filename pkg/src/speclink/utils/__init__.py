"""
Utilities package for speclink runs.
"""

from .file_handler import FileHandler
from .report_writer import ReportWriter

__all__ = ['FileHandler', 'ReportWriter']
