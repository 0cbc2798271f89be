from flask import Blueprint

bp_report = Blueprint('report', __name__, cli_group=None)

from . import commands
