from flask import Blueprint

bp_prg = Blueprint('prg', __name__, cli_group=None)

from . import commands
