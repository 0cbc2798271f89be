from flask import Blueprint

bp_verify = Blueprint('verify', __name__, cli_group=None)

from . import commands
