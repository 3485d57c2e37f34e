__version__ = "0.1.0"
__copyright__ = "Copyright 2024"
__author__ = "l2r-pipeline contributors"
__licence__ = "GPL3"

name = "l2r_pipeline"

__all__ = ['__version__', '__copyright__', '__author__', '__licence__']
