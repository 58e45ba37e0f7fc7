"""Provide fixtures for the entire parent directory."""

from tests.fixtures.chains import *
from tests.fixtures.configs import *
