from django.urls import path

from . import views

app_name = 'risk'

urlpatterns = [
    path('cs01/', views.cs01, name='cs01'),
    path('vod-curve/', views.vod_curve, name='vod-curve'),
    path('trio-report/', views.trio, name='trio-report'),
]
