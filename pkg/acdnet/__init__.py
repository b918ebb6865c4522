"""ACDNet medication recommendation: synthetic EHR corpus, model, training and evaluation."""
__author__ = "acdnet developers"
__license__ = "GPLv3"
__version__ = "0.1.0"

import logging

logging.getLogger("acdnet").addHandler(logging.NullHandler())
