"""
URL configuration for example_project project.

dj_disruption_recovery has no HTTP surface; everything runs through
management commands (``python manage.py simulate|decide|calibrate|report|oracle``).
"""

urlpatterns = []
