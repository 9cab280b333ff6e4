"""Placeholder, implemented module by module during the build."""
def main(*a, **k): raise NotImplementedError
