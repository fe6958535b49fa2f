"""
Backend package containing the RR quality service and shared modules.
"""
