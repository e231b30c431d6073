"""codm: a self-hosted co-DM assistant service.

Rolls random encounters from weighted tables, distills monster stat blocks
into table-ready prose through an LLM provider, hosts focused brainstorming
threads grounded in encounter context, and records DM feedback -- all
runnable fully offline against a deterministic mock provider.
"""

__version__ = "0.1.0"
