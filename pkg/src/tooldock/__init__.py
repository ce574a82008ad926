"""tooldock: standardized tool interfaces, continuous reliability evaluation,
and pluggable agent policies for tool-using LLM systems."""

__version__ = "0.1.0"
